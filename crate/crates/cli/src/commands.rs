//! Single evaluations, optimizer runs, oracle solves and sweeps.

use std::fmt::Write as _;

use aoii_core::analytic::{actuation_rate, aoii_distribution, avg_aoii, p_delta0, sampling_rate};
use aoii_core::optimize::{
    optimize_actuation, optimize_sampling, ActuationOptResult, Adjustment, SamplingOptResult,
};
use aoii_core::oracle::{solve_chain, OracleReport, DEFAULT_TAIL_BOUND, DEFAULT_TRUNCATION};
use aoii_core::sim::{self, Estimate, SimConfig, SimReport, DEFAULT_BURN_IN};
use aoii_core::{ActuationPolicy, ChannelParams, Execution, SamplingPolicy, SourceParams};

use crate::args::{AnalyticWhat, Eval, Format, Metric, OptimizeWhat, Params, SweepArgs};
use crate::config::{resolved, Resolver, DEFAULT_REPS, DEFAULT_SLOTS};
use crate::error::CliError;
use crate::output::{emit_csv, emit_text, Row};

/// `count` evenly spaced values from `start` to `stop` inclusive.
/// `count` evenly spaced points; both endpoints are hit exactly.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let last = (count - 1) as f64;
    (0..count)
        .map(|i| {
            let t = i as f64 / last;
            start * (1.0 - t) + stop * t
        })
        .collect()
}

pub fn analytic_metric(
    metric: Metric,
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> aoii_core::Result<f64> {
    match metric {
        Metric::Aoii => avg_aoii(policy, src, ch),
        Metric::Rate => sampling_rate(policy, src, ch),
        Metric::Pdelta0 => p_delta0(policy, act, src, ch),
        Metric::Actrate => actuation_rate(policy, act, src, ch),
    }
}

pub fn sim_metric(report: &SimReport, metric: Metric) -> Estimate {
    match metric {
        Metric::Aoii => report.mean_aoii,
        Metric::Rate => report.sampling_rate,
        Metric::Pdelta0 => report.p_delta0,
        Metric::Actrate => report.actuation_rate,
    }
}

pub fn oracle_metric(report: &OracleReport, metric: Metric) -> f64 {
    match metric {
        Metric::Aoii => report.mean_aoii,
        Metric::Rate => report.sampling_rate,
        Metric::Pdelta0 => report.p_delta0,
        Metric::Actrate => report.actuation_rate,
    }
}

fn uses_actuation(metric: Metric) -> bool {
    matches!(metric, Metric::Pdelta0 | Metric::Actrate)
}

fn metric_label(metric: Metric) -> &'static str {
    match metric {
        Metric::Aoii => "average AoII",
        Metric::Rate => "sampling rate",
        Metric::Pdelta0 => "P[CoAU = 0]",
        Metric::Actrate => "actuation rate",
    }
}

const METRICS: [Metric; 4] = [Metric::Aoii, Metric::Pdelta0, Metric::Rate, Metric::Actrate];

/// Default truncation: enough levels past a TARS threshold.
pub fn default_truncation(policy: &SamplingPolicy) -> usize {
    match *policy {
        SamplingPolicy::Tars { n, .. } => DEFAULT_TRUNCATION + n as usize,
        _ => DEFAULT_TRUNCATION,
    }
}

/// Simulation settings from the flags; burn-in defaults to 10^4 slots, or a
/// tenth of the run when that is shorter.
pub fn sim_config(
    r: &mut Resolver<'_>,
    src: SourceParams,
    ch: ChannelParams,
    policy: SamplingPolicy,
    act: ActuationPolicy,
) -> Option<SimConfig> {
    let p = r.params();
    let slots = p.slots.unwrap_or(DEFAULT_SLOTS);
    let burn_in = p.burnin.unwrap_or(DEFAULT_BURN_IN.min(slots / 10));
    let cfg = SimConfig::new(src, ch, policy, act, slots)
        .with_burn_in(burn_in)
        .with_replications(p.reps.unwrap_or(DEFAULT_REPS))
        .with_seed(p.seed.unwrap_or(0));
    match cfg.validate() {
        Ok(()) => Some(cfg),
        Err(e) => {
            r.fail(e.to_string());
            None
        }
    }
}

struct Model {
    src: SourceParams,
    ch: ChannelParams,
    policy: SamplingPolicy,
    act: ActuationPolicy,
}

fn resolve_model(p: &Params) -> Result<Model, CliError> {
    let mut r = Resolver::new(p);
    let src = r.source();
    let ch = r.channel();
    let policy = r.policy();
    let act = r.actuation();
    let v = (|| {
        Some(Model {
            src: src?,
            ch: ch?,
            policy: policy?,
            act: act?,
        })
    })();
    resolved(r, v)
}

pub fn eval_analytic(p: &Params, metric: Metric) -> Result<Row, CliError> {
    let m = resolve_model(p)?;
    let mut row = Row::new(&m.policy, &m.src, &m.ch);
    if uses_actuation(metric) {
        row = row.with_actuation(&m.act);
    }
    row.analytic = Some(analytic_metric(metric, &m.policy, &m.act, &m.src, &m.ch)?);
    Ok(row)
}

fn eval_sim(p: &Params, metric: Metric, exec: Execution) -> Result<(Row, SimReport), CliError> {
    let m = resolve_model(p)?;
    let mut r = Resolver::new(p);
    let cfg = sim_config(&mut r, m.src, m.ch, m.policy, m.act);
    let cfg = resolved(r, cfg)?;
    let report = sim::run_with(&cfg, exec)?;
    let mut row = Row::new(&m.policy, &m.src, &m.ch).with_actuation(&m.act);
    row.sim = Some(sim_metric(&report, metric));
    Ok((row, report))
}

fn eval_oracle(p: &Params, metric: Metric) -> Result<(Row, OracleReport, Model), CliError> {
    let m = resolve_model(p)?;
    let mut r = Resolver::new(p);
    let k = r.truncation(default_truncation(&m.policy));
    let k = resolved(r, k)?;
    let report = solve_chain(&m.policy, &m.act, &m.src, &m.ch, k, DEFAULT_TAIL_BOUND)?;
    let mut row = Row::new(&m.policy, &m.src, &m.ch);
    if uses_actuation(metric) {
        row = row.with_actuation(&m.act);
    }
    row.oracle = Some(oracle_metric(&report, metric));
    row.analytic = analytic_metric(metric, &m.policy, &m.act, &m.src, &m.ch).ok();
    Ok((row, report, m))
}

fn eval_opt_sampling(p: &Params) -> Result<(Row, SamplingOptResult), CliError> {
    let mut r = Resolver::new(p);
    let src = r.source();
    let ch = r.channel();
    let kind = r.policy_kind();
    let eta = r.budget(p.eta, "eta");
    let v = (|| Some((src?, ch?, kind?, eta?)))();
    let (src, ch, kind, eta) = resolved(r, v)?;
    let opt = optimize_sampling(kind, &src, &ch, eta)?;
    let mut row = Row::new(&opt.policy, &src, &ch);
    row.eta = Some(eta);
    row.analytic = Some(opt.objective);
    Ok((row, opt))
}

/// With `--eta` the sampling policy is first optimized for that budget;
/// otherwise its parameters come from the flags.
fn eval_opt_actuation(p: &Params) -> Result<(Row, ActuationOptResult, SamplingPolicy), CliError> {
    let (policy, src, ch) = if p.eta.is_some() {
        let (_, opt) = eval_opt_sampling(p)?;
        let mut r = Resolver::new(p);
        let v = (|| Some((r.source()?, r.channel()?)))();
        let (src, ch) = resolved(r, v)?;
        (opt.policy, src, ch)
    } else {
        let m = resolve_model(p)?;
        (m.policy, m.src, m.ch)
    };
    let mut r = Resolver::new(p);
    let mu = r.budget(p.mu, "mu");
    let mu = resolved(r, mu)?;
    let opt = optimize_actuation(&policy, &src, &ch, mu)?;
    let mut row = Row::new(&policy, &src, &ch).with_actuation(&opt.actuation);
    row.eta = p.eta;
    row.mu = Some(mu);
    row.analytic = Some(opt.objective);
    Ok((row, opt, policy))
}

pub fn analytic(what: AnalyticWhat, p: &Params) -> Result<(), CliError> {
    let metric = match what {
        AnalyticWhat::Aoii => Metric::Aoii,
        AnalyticWhat::Rate => Metric::Rate,
        AnalyticWhat::Pdelta0 => Metric::Pdelta0,
        AnalyticWhat::Actrate => Metric::Actrate,
        AnalyticWhat::Dist => return distribution(p),
    };
    let row = eval_analytic(p, metric)?;
    match Resolver::new(p).format(Format::Plain) {
        Format::Csv => emit_csv(&[row], p.out.as_deref()),
        Format::Plain => emit_text(
            &format!("{}\n", row.analytic.unwrap_or(f64::NAN)),
            p.out.as_deref(),
        ),
    }
}

fn distribution(p: &Params) -> Result<(), CliError> {
    if p.format == Some(Format::Csv) {
        return Err(CliError::invalid(
            "analytic dist writes plain text only (use --format plain)",
        ));
    }
    let m = resolve_model(p)?;
    let mut r = Resolver::new(p);
    let k = r.truncation(50);
    let k = resolved(r, k)?;
    let d = aoii_distribution(&m.policy, &m.src, &m.ch, k)?;
    let mut text = String::new();
    for (i, v) in d.pi.iter().enumerate() {
        writeln!(text, "{i}\t{v}").unwrap();
    }
    writeln!(text, ">{k}\t{}", d.tail_mass).unwrap();
    writeln!(text, "mean\t{}", d.mean()).unwrap();
    emit_text(&text, p.out.as_deref())
}

pub fn simulate(p: &Params) -> Result<(), CliError> {
    let metric = Resolver::new(p).metric();
    let (row, report) = eval_sim(p, metric, Execution::default())?;
    match Resolver::new(p).format(Format::Plain) {
        Format::Csv => emit_csv(&[row], p.out.as_deref()),
        Format::Plain => {
            let mut text = String::new();
            for m in METRICS {
                let e = sim_metric(&report, m);
                writeln!(
                    text,
                    "{:<16}{:.6} ± {:.6}",
                    metric_label(m),
                    e.mean,
                    e.half_width
                )
                .unwrap();
            }
            emit_text(&text, p.out.as_deref())
        }
    }
}

fn adjustment_note(adj: Adjustment) -> &'static str {
    match adj {
        Adjustment::None => "",
        Adjustment::Clamped => " (clamped into [0, 1])",
        Adjustment::GridFallback => " (closed form unusable; grid-search point)",
    }
}

pub fn optimize(what: OptimizeWhat, p: &Params) -> Result<(), CliError> {
    let format = Resolver::new(p).format(Format::Plain);
    let (row, text) = match what {
        OptimizeWhat::Sampling => {
            let (row, opt) = eval_opt_sampling(p)?;
            let text = format!(
                "policy          {}{}\naverage AoII    {}\nsampling rate   {}\n",
                opt.policy,
                adjustment_note(opt.adjustment),
                opt.objective,
                opt.constraint_value
            );
            (row, text)
        }
        OptimizeWhat::Actuation => {
            let (row, opt, policy) = eval_opt_actuation(p)?;
            let vacuous = if opt.vacuous_pc1 {
                " (p_c1 vacuous: no decodes)"
            } else {
                ""
            };
            let text = format!(
                "sampling        {policy}\nactuation       p_c1={}, p_c2={}{vacuous}\nP[CoAU = 0]     {}\nactuation rate  {}\n",
                opt.actuation.p_c1, opt.actuation.p_c2, opt.objective, opt.constraint_value
            );
            (row, text)
        }
    };
    match format {
        Format::Csv => emit_csv(&[row], p.out.as_deref()),
        Format::Plain => emit_text(&text, p.out.as_deref()),
    }
}

pub fn oracle(p: &Params) -> Result<(), CliError> {
    let metric = Resolver::new(p).metric();
    let (row, report, m) = eval_oracle(p, metric)?;
    match Resolver::new(p).format(Format::Plain) {
        Format::Csv => emit_csv(&[row], p.out.as_deref()),
        Format::Plain => {
            let mut text = String::new();
            writeln!(text, "states          {}", report.stationary.len()).unwrap();
            writeln!(text, "tail mass       {:e}", report.tail_mass).unwrap();
            writeln!(text, "residual        {:e}", report.residual).unwrap();
            writeln!(
                text,
                "{:<16}{:<24}{:<24}rel. diff",
                "metric", "oracle", "analytic"
            )
            .unwrap();
            for metric in METRICS {
                let o = oracle_metric(&report, metric);
                let line = match analytic_metric(metric, &m.policy, &m.act, &m.src, &m.ch) {
                    Ok(a) => format!(
                        "{:<24}{:<24}{:.3e}",
                        o,
                        a,
                        (o - a).abs() / a.abs().max(1e-300)
                    ),
                    Err(_) => format!("{o:<24}-"),
                };
                writeln!(text, "{:<16}{line}", metric_label(metric)).unwrap();
            }
            emit_text(&text, p.out.as_deref())
        }
    }
}

fn set_axis(p: &mut Params, name: &str, v: f64) -> bool {
    let slot = match name {
        "q" => &mut p.q,
        "ps" => &mut p.ps,
        "pr" => &mut p.pr,
        "pc" => &mut p.pc,
        "qa1" => &mut p.qa1,
        "qa2" => &mut p.qa2,
        "pth" => &mut p.pth,
        "eta" => &mut p.eta,
        "mu" => &mut p.mu,
        "pc1" => &mut p.pc1,
        "pc2" => &mut p.pc2,
        _ => return false,
    };
    *slot = Some(v);
    true
}

pub fn sweep(axis: &SweepArgs, p: &Params) -> Result<(), CliError> {
    let mut errors = Vec::new();
    if !set_axis(&mut p.clone(), &axis.param, 0.0) {
        errors.push(format!(
            "unknown sweep parameter '{}' (expected q|ps|pr|pc|qa1|qa2|pth|eta|mu|pc1|pc2)",
            axis.param
        ));
    }
    if axis.count < 2 {
        errors.push(format!(
            "count out of range: {} (need count >= 2)",
            axis.count
        ));
    }
    if !errors.is_empty() {
        return Err(CliError::Invalid(errors));
    }
    let metric = Resolver::new(p).metric();
    let xs = linspace(axis.start, axis.stop, axis.count);
    let rows = Execution::default().map(xs.len(), |i| {
        let mut point = p.clone();
        set_axis(&mut point, &axis.param, xs[i]);
        match axis.eval {
            Eval::Analytic => eval_analytic(&point, metric),
            Eval::Sim => eval_sim(&point, metric, Execution::Sequential).map(|r| r.0),
            Eval::Oracle => eval_oracle(&point, metric).map(|r| r.0),
            Eval::OptSampling => eval_opt_sampling(&point).map(|r| r.0),
            Eval::OptActuation => eval_opt_actuation(&point).map(|r| r.0),
        }
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    match Resolver::new(p).format(Format::Csv) {
        Format::Csv => emit_csv(&rows, p.out.as_deref()),
        Format::Plain => {
            let mut text = String::new();
            for (x, row) in xs.iter().zip(&rows) {
                let value = row
                    .analytic
                    .or(row.oracle)
                    .or(row.sim.map(|e| e.mean))
                    .unwrap_or(f64::NAN);
                writeln!(text, "{x}\t{value}").unwrap();
            }
            emit_text(&text, p.out.as_deref())
        }
    }
}
