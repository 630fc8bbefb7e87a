//! Exhaustive parameter scans used to check the closed-form optima.
//!
//! Grid values are `i / m` with `m = round(1 / step)`, so budgets such as
//! `0.3` sit exactly on the grid. The best point minimizes (or maximizes) the
//! objective; ties go to the smaller rate, then to the lexicographically
//! smaller parameters. Each outer index is scanned independently and the
//! partial winners are reduced in index order, so the answer does not depend
//! on the execution mode.

use std::cmp::Ordering;

use crate::analytic::{actuation_rate, avg_aoii, p_delta0, sampling_rate};
use crate::error::{Error, Result};
use crate::model::{ChannelParams, SourceParams};
use crate::optimize::{tars_threshold, ActuationOptResult, Adjustment, SamplingOptResult};
use crate::policy::{ActuationPolicy, PolicyKind, SamplingPolicy};
use crate::Execution;

use super::{solve_chain, DEFAULT_TAIL_BOUND, DEFAULT_TRUNCATION};

pub const DEFAULT_STEP: f64 = 0.001;
/// Extra thresholds scanned beyond the closed-form TARS threshold.
pub const TARS_MARGIN: u32 = 5;
/// Slack on a budget when deciding feasibility of a grid point.
const FEASIBILITY_SLACK: f64 = 1e-12;

fn grid_size(step: f64) -> Result<usize> {
    if step > 0.0 && step <= 0.1 {
        Ok((1.0 / step).round() as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "grid step out of range: {step} (need 0 < step <= 0.1)"
        )))
    }
}

fn check_budget(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} out of range: {value} (need 0 <= {name} <= 1)"
        )))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    objective: f64,
    rate: f64,
    params: (f64, f64),
}

impl Candidate {
    /// `Less` means `self` is preferred. `sense` is `1.0` to minimize and
    /// `-1.0` to maximize.
    fn rank(&self, other: &Self, sense: f64) -> Ordering {
        (sense * self.objective)
            .total_cmp(&(sense * other.objective))
            .then(self.rate.total_cmp(&other.rate))
            .then(self.params.0.total_cmp(&other.params.0))
            .then(self.params.1.total_cmp(&other.params.1))
    }
}

fn reduce(parts: Vec<Option<Candidate>>, sense: f64) -> Option<Candidate> {
    parts
        .into_iter()
        .flatten()
        .fold(None, |best, c| match best {
            Some(b) if b.rank(&c, sense) != Ordering::Greater => Some(b),
            _ => Some(c),
        })
}

fn keep_better(best: &mut Option<Candidate>, c: Candidate, sense: f64) {
    if best.is_none_or(|b| c.rank(&b, sense) == Ordering::Less) {
        *best = Some(c);
    }
}

/// Best feasible member of `kind` by analytic average AoII.
pub fn grid_search_sampling(
    kind: PolicyKind,
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
    step: f64,
    exec: Execution,
) -> Result<SamplingOptResult> {
    let m = grid_size(step)?;
    check_budget("eta", eta)?;
    if src.p() <= 0.0 {
        return Err(Error::DegenerateSource);
    }
    let v = |i: usize| i as f64 / m as f64;
    let build = |a: f64, b: f64| match kind {
        PolicyKind::Rs => SamplingPolicy::Rs { p_r: b },
        PolicyKind::Cars => SamplingPolicy::Cars { p_c: b },
        PolicyKind::Sars => SamplingPolicy::Sars { q_a1: a, q_a2: b },
        PolicyKind::Tars => SamplingPolicy::Tars {
            n: a as u32,
            p_th: b,
        },
    };
    // Outer axis: unused for RS/CARS, q_a1 for SARS, n for TARS.
    let outer: Vec<f64> = match kind {
        PolicyKind::Rs | PolicyKind::Cars => vec![0.0],
        PolicyKind::Sars => (0..=m).map(v).collect(),
        PolicyKind::Tars => {
            let base = tars_threshold(src, ch, eta).unwrap_or(1).min(1_000_000);
            (1..=base + TARS_MARGIN).map(f64::from).collect()
        }
    };
    let parts = exec.map(outer.len(), |oi| -> Result<Option<Candidate>> {
        let a = outer[oi];
        let start = if kind == PolicyKind::Sars { oi } else { 0 };
        let mut best = None;
        for j in start..=m {
            let policy = build(a, v(j));
            let rate = sampling_rate(&policy, src, ch)?;
            if rate > eta + FEASIBILITY_SLACK {
                continue;
            }
            let objective = avg_aoii(&policy, src, ch)?;
            if objective.is_finite() {
                keep_better(
                    &mut best,
                    Candidate {
                        objective,
                        rate,
                        params: (a, v(j)),
                    },
                    1.0,
                );
            }
        }
        Ok(best)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let best =
        reduce(parts, 1.0).ok_or_else(|| Error::NonConvergence("no feasible grid point".into()))?;
    Ok(SamplingOptResult {
        policy: build(best.params.0, best.params.1),
        objective: best.objective,
        constraint_value: best.rate,
        eta,
        adjustment: Adjustment::None,
    })
}

/// `value(c1, c2) = base + slope1 c1 + slope2 c2`.
#[derive(Debug, Clone, Copy)]
struct Affine {
    base: f64,
    slope1: f64,
    slope2: f64,
}

impl Affine {
    fn from_corners(f: impl Fn(ActuationPolicy) -> Result<f64>) -> Result<Self> {
        let base = f(ActuationPolicy::NEVER)?;
        Ok(Self {
            base,
            slope1: f(ActuationPolicy {
                p_c1: 1.0,
                p_c2: 0.0,
            })? - base,
            slope2: f(ActuationPolicy {
                p_c1: 0.0,
                p_c2: 1.0,
            })? - base,
        })
    }

    fn at(&self, c1: f64, c2: f64) -> f64 {
        self.base + self.slope1 * c1 + self.slope2 * c2
    }
}

/// Best feasible `(p_c1, p_c2)` grid point for a fixed sampling policy.
///
/// Both `P[CoAU = 0]` and the actuation rate are affine in `(p_c1, p_c2)`,
/// so each is recovered exactly from three corner evaluations; for every
/// `p_c1` on the grid the best `p_c2` is then either zero or the largest
/// feasible grid value. TARS corners come from [`solve_chain`].
pub fn grid_search_actuation(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    mu: f64,
    step: f64,
    exec: Execution,
) -> Result<ActuationOptResult> {
    let m = grid_size(step)?;
    check_budget("mu", mu)?;
    let (objective, rate) = match *policy {
        SamplingPolicy::Tars { n, .. } => {
            let k = DEFAULT_TRUNCATION.max(n as usize + DEFAULT_TRUNCATION);
            let report = solve_chain(
                policy,
                &ActuationPolicy::ALWAYS,
                src,
                ch,
                k,
                DEFAULT_TAIL_BOUND,
            )?;
            let events = report.events;
            (
                Affine::from_corners(|a| Ok(events.p_delta0(&a)))?,
                Affine::from_corners(|a| Ok(events.actuation_rate(&a)))?,
            )
        }
        _ => (
            Affine::from_corners(|a| p_delta0(policy, &a, src, ch))?,
            Affine::from_corners(|a| actuation_rate(policy, &a, src, ch))?,
        ),
    };
    let v = |i: usize| i as f64 / m as f64;
    let limit = mu + FEASIBILITY_SLACK;
    let parts = exec.map(m + 1, |i| {
        let c1 = v(i);
        if rate.at(c1, 0.0) > limit {
            return None;
        }
        let j = if objective.slope2 > 0.0 {
            // Largest feasible c2; the rate is nondecreasing in c2.
            let mut j = if rate.slope2 > 0.0 {
                let raw = (limit - rate.at(c1, 0.0)) / rate.slope2 * m as f64;
                (raw.floor().max(0.0) as usize).min(m)
            } else {
                m
            };
            while j > 0 && rate.at(c1, v(j)) > limit {
                j -= 1;
            }
            while j < m && rate.at(c1, v(j + 1)) <= limit {
                j += 1;
            }
            j
        } else {
            0
        };
        let c2 = v(j);
        Some(Candidate {
            objective: objective.at(c1, c2),
            rate: rate.at(c1, c2),
            params: (c1, c2),
        })
    });
    let best = reduce(parts, -1.0)
        .ok_or_else(|| Error::NonConvergence("no feasible grid point".into()))?;
    let actuation = ActuationPolicy {
        p_c1: best.params.0,
        p_c2: best.params.1,
    };
    Ok(ActuationOptResult {
        actuation,
        objective: best.objective,
        constraint_value: best.rate,
        mu,
        vacuous_pc1: false,
    })
}
