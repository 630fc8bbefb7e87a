//! Data behind the figures, one CSV per curve.
//!
//! * `2a`, `2b`, `3a`, `3b`: minimum average AoII against the sampling budget
//!   `eta` in `[0.02, 1]` for each policy, with `N = 3` and `(q, p_s)` equal to
//!   `(0.1, 0.1)`, `(0.1, 0.9)`, `(0.8, 0.1)` and `(0.8, 0.9)` respectively.
//!   Files: `fig<id>_<policy>.csv`.
//! * `4*` (RS), `5*` (SARS), `6*` (CARS): `P[CoAU = 0]` against `q` in
//!   `[0.05, 0.95]` with `N = 3`, `mu = 1`, sampling optimized for
//!   `eta = 0.1` (`a`) or `eta = 0.7` (`b`), for `p_s` in `{0.1, 0.9}`. The
//!   optimal actuation and the always-act baseline go to separate files:
//!   `fig<id>_ps<p_s>_optimal.csv` and `fig<id>_ps<p_s>_nonoptimal.csv`.

use std::path::{Path, PathBuf};

use aoii_core::analytic::p_delta0;
use aoii_core::optimize::{optimize_actuation, optimize_sampling};
use aoii_core::oracle::{solve_chain, DEFAULT_TAIL_BOUND};
use aoii_core::sim::{self, SimConfig};
use aoii_core::{
    ActuationPolicy, ChannelParams, Execution, PolicyKind, SamplingPolicy, SourceParams,
};

use crate::args::{Figure, Metric, Params, ReproduceArgs};
use crate::commands::{default_truncation, linspace, oracle_metric, sim_config, sim_metric};
use crate::config::{resolved, Resolver};
use crate::error::CliError;
use crate::output::{emit_csv, Row};

pub const OUT_DIR_ENV: &str = "AOII_OUT_DIR";
const N: usize = 3;

enum Plan {
    Aoii { q: f64, ps: f64 },
    Actuation { kind: PolicyKind, eta: f64 },
}

fn plan(fig: Figure) -> (&'static str, Plan) {
    use Figure::*;
    match fig {
        F2a => ("2a", Plan::Aoii { q: 0.1, ps: 0.1 }),
        F2b => ("2b", Plan::Aoii { q: 0.1, ps: 0.9 }),
        F3a => ("3a", Plan::Aoii { q: 0.8, ps: 0.1 }),
        F3b => ("3b", Plan::Aoii { q: 0.8, ps: 0.9 }),
        F4a => (
            "4a",
            Plan::Actuation {
                kind: PolicyKind::Rs,
                eta: 0.1,
            },
        ),
        F4b => (
            "4b",
            Plan::Actuation {
                kind: PolicyKind::Rs,
                eta: 0.7,
            },
        ),
        F5a => (
            "5a",
            Plan::Actuation {
                kind: PolicyKind::Sars,
                eta: 0.1,
            },
        ),
        F5b => (
            "5b",
            Plan::Actuation {
                kind: PolicyKind::Sars,
                eta: 0.7,
            },
        ),
        F6a => (
            "6a",
            Plan::Actuation {
                kind: PolicyKind::Cars,
                eta: 0.1,
            },
        ),
        F6b => (
            "6b",
            Plan::Actuation {
                kind: PolicyKind::Cars,
                eta: 0.7,
            },
        ),
    }
}

/// `--out`, else `$AOII_OUT_DIR`, else the working directory.
fn out_dir(p: &Params) -> PathBuf {
    p.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Optional oracle and Monte Carlo columns for one row.
struct Extras<'a> {
    args: &'a ReproduceArgs,
    params: &'a Params,
    /// Simulation settings with a placeholder model, validated up front.
    sim_template: Option<SimConfig>,
}

impl Extras<'_> {
    fn fill(
        &self,
        row: &mut Row,
        policy: &SamplingPolicy,
        act: &ActuationPolicy,
        src: &SourceParams,
        ch: &ChannelParams,
        metric: Metric,
    ) -> Result<(), CliError> {
        if self.args.with_oracle {
            let k = self
                .params
                .truncation
                .unwrap_or_else(|| default_truncation(policy));
            let r = solve_chain(policy, act, src, ch, k, DEFAULT_TAIL_BOUND)?;
            row.oracle = Some(oracle_metric(&r, metric));
        }
        if let Some(template) = &self.sim_template {
            let cfg = SimConfig {
                source: *src,
                channel: *ch,
                sampling: *policy,
                actuation: *act,
                ..template.clone()
            };
            let r = sim::run_with(&cfg, Execution::Sequential)?;
            row.sim = Some(sim_metric(&r, metric));
        }
        Ok(())
    }
}

fn write(dir: &Path, name: String, rows: &[Row]) -> Result<(), CliError> {
    let path = dir.join(name);
    emit_csv(rows, Some(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn reproduce(args: &ReproduceArgs, p: &Params) -> Result<(), CliError> {
    if args.points < 2 {
        return Err(CliError::invalid(format!(
            "points out of range: {} (need points >= 2)",
            args.points
        )));
    }
    let sim_template = if args.with_sim {
        let mut r = Resolver::new(p);
        let cfg = sim_config(
            &mut r,
            SourceParams::new(N, 0.5)?,
            ChannelParams::new(0.5)?,
            SamplingPolicy::Rs { p_r: 0.5 },
            ActuationPolicy::ALWAYS,
        );
        Some(resolved(r, cfg)?)
    } else {
        None
    };
    let extras = Extras {
        args,
        params: p,
        sim_template,
    };
    let dir = out_dir(p);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::invalid(format!("output {}: {e}", dir.display())))?;
    let (id, plan) = plan(args.figure);
    let exec = Execution::default();

    match plan {
        Plan::Aoii { q, ps } => {
            let src = SourceParams::new(N, q)?;
            let ch = ChannelParams::new(ps)?;
            let etas = linspace(0.02, 1.0, args.points);
            for kind in PolicyKind::ALL {
                let rows = exec.map(etas.len(), |i| -> Result<Row, CliError> {
                    let opt = optimize_sampling(kind, &src, &ch, etas[i])?;
                    let mut row = Row::new(&opt.policy, &src, &ch);
                    row.eta = Some(etas[i]);
                    row.analytic = Some(opt.objective);
                    extras.fill(
                        &mut row,
                        &opt.policy,
                        &ActuationPolicy::ALWAYS,
                        &src,
                        &ch,
                        Metric::Aoii,
                    )?;
                    Ok(row)
                });
                let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
                write(&dir, format!("fig{id}_{}.csv", kind.name()), &rows)?;
            }
        }
        Plan::Actuation { kind, eta } => {
            let qs = linspace(0.05, 0.95, args.points);
            for ps in [0.1, 0.9] {
                let ch = ChannelParams::new(ps)?;
                let pairs = exec.map(qs.len(), |i| -> Result<(Row, Row), CliError> {
                    let src = SourceParams::new(N, qs[i])?;
                    let sampling = optimize_sampling(kind, &src, &ch, eta)?;
                    let policy = sampling.policy;
                    let best = optimize_actuation(&policy, &src, &ch, 1.0)?;

                    let mut optimal = Row::new(&policy, &src, &ch).with_actuation(&best.actuation);
                    optimal.eta = Some(eta);
                    optimal.mu = Some(1.0);
                    optimal.analytic = Some(best.objective);
                    extras.fill(
                        &mut optimal,
                        &policy,
                        &best.actuation,
                        &src,
                        &ch,
                        Metric::Pdelta0,
                    )?;

                    let always = ActuationPolicy::ALWAYS;
                    let mut baseline = Row::new(&policy, &src, &ch).with_actuation(&always);
                    baseline.eta = Some(eta);
                    baseline.mu = Some(1.0);
                    baseline.analytic = Some(p_delta0(&policy, &always, &src, &ch)?);
                    extras.fill(&mut baseline, &policy, &always, &src, &ch, Metric::Pdelta0)?;
                    Ok((optimal, baseline))
                });
                let (optimal, baseline): (Vec<_>, Vec<_>) = pairs
                    .into_iter()
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .unzip();
                write(&dir, format!("fig{id}_ps{ps}_optimal.csv"), &optimal)?;
                write(&dir, format!("fig{id}_ps{ps}_nonoptimal.csv"), &baseline)?;
            }
        }
    }
    Ok(())
}
