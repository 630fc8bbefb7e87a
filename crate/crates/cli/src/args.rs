use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aoii",
    version,
    about = "AoII / CoAU evaluation, simulation and optimization"
)]
pub struct Cli {
    /// Line-oriented `key = value` file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form metrics.
    Analytic {
        #[arg(value_enum)]
        what: AnalyticWhat,
        #[command(flatten)]
        params: Params,
    },
    /// Monte Carlo estimate with 95% confidence intervals.
    Simulate {
        #[command(flatten)]
        params: Params,
    },
    /// Budget-constrained optima.
    Optimize {
        #[arg(value_enum)]
        what: OptimizeWhat,
        #[command(flatten)]
        params: Params,
    },
    /// Exact stationary solution of the truncated joint chain.
    Oracle {
        #[command(flatten)]
        params: Params,
    },
    /// Evaluate a metric along one parameter axis.
    Sweep {
        #[command(flatten)]
        axis: SweepArgs,
        #[command(flatten)]
        params: Params,
    },
    /// Regenerate the data behind a figure as CSV files.
    Reproduce {
        #[command(flatten)]
        figure: ReproduceArgs,
        #[command(flatten)]
        params: Params,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyticWhat {
    /// Average AoII.
    Aoii,
    /// Sampling rate.
    Rate,
    /// Probability that the CoAU is zero.
    Pdelta0,
    /// Actuation rate.
    Actrate,
    /// Stationary AoII distribution (plain text).
    Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizeWhat {
    Sampling,
    Actuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Average AoII.
    Aoii,
    /// Sampling rate.
    Rate,
    /// Probability that the CoAU is zero.
    Pdelta0,
    /// Actuation rate.
    Actrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Eval {
    Analytic,
    Sim,
    Oracle,
    OptSampling,
    OptActuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "2a")]
    F2a,
    #[value(name = "2b")]
    F2b,
    #[value(name = "3a")]
    F3a,
    #[value(name = "3b")]
    F3b,
    #[value(name = "4a")]
    F4a,
    #[value(name = "4b")]
    F4b,
    #[value(name = "5a")]
    F5a,
    #[value(name = "5b")]
    F5b,
    #[value(name = "6a")]
    F6a,
    #[value(name = "6b")]
    F6b,
}

/// Model, policy, budget and run flags shared by every command. All are
/// optional here so that a config file can supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Number of source states.
    #[arg(long = "N")]
    pub n_states: Option<usize>,
    /// Probability that the source stays put.
    #[arg(long)]
    pub q: Option<f64>,
    /// Decoding probability of the channel.
    #[arg(long)]
    pub ps: Option<f64>,
    /// Sampling policy: rs, cars, sars or tars.
    #[arg(long)]
    pub policy: Option<String>,
    /// RS sampling probability.
    #[arg(long)]
    pub pr: Option<f64>,
    /// CARS sampling probability.
    #[arg(long)]
    pub pc: Option<f64>,
    /// SARS probability while synced.
    #[arg(long)]
    pub qa1: Option<f64>,
    /// SARS probability while erroneous.
    #[arg(long)]
    pub qa2: Option<f64>,
    /// TARS threshold.
    #[arg(long = "n")]
    pub threshold: Option<u32>,
    /// TARS probability at AoII = n - 1.
    #[arg(long)]
    pub pth: Option<f64>,
    /// Sampling-rate budget.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Actuation-rate budget.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Actuation probability after a decoded sample.
    #[arg(long)]
    pub pc1: Option<f64>,
    /// Actuation probability otherwise.
    #[arg(long)]
    pub pc2: Option<f64>,
    /// Retained slots per replication; the burn-in runs before them.
    #[arg(long)]
    pub slots: Option<u64>,
    /// Discarded warm-up slots per replication [default: min(10^4, slots/10)]
    #[arg(long)]
    pub burnin: Option<u64>,
    /// Independent replications
    #[arg(long)]
    pub reps: Option<u32>,
    /// Master seed; replication i uses stream i
    #[arg(long)]
    pub seed: Option<u64>,
    /// Oracle truncation level K.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Metric for single-value CSV rows and sweeps.
    #[arg(long, value_enum)]
    pub metric: Option<Metric>,
    /// Output file (directory for `reproduce`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Parameter to vary: q, ps, pr, pc, qa1, qa2, pth, eta, mu, pc1 or pc2.
    #[arg(long)]
    pub param: String,
    /// First value of the swept parameter
    #[arg(long)]
    pub start: f64,
    /// Last value of the swept parameter
    #[arg(long)]
    pub stop: f64,
    /// Number of evenly spaced points, endpoints included.
    #[arg(long)]
    pub count: usize,
    /// How each point is evaluated
    #[arg(long, value_enum, default_value = "analytic")]
    pub eval: Eval,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub figure: Figure,
    /// Points on the x axis.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Add Monte Carlo columns (uses the simulation flags).
    #[arg(long)]
    pub with_sim: bool,
    /// Add joint-chain oracle columns.
    #[arg(long)]
    pub with_oracle: bool,
}
