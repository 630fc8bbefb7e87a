//! Budget-constrained optima.
//!
//! Sampling: minimize average AoII subject to a long-run sampling rate of at
//! most `eta`. Actuation: for a fixed sampling policy, maximize `P[CoAU = 0]`
//! subject to a long-run actuation rate of at most `mu`.
//!
//! Where a case analysis has ties (equality in a branch condition) the first
//! listed branch is taken.

use crate::analytic::{actuation_rate, avg_aoii, p_delta0, sampling_rate};
use crate::error::{Error, Result};
use crate::model::{ChannelParams, SourceParams};
use crate::oracle::grid::{grid_search_sampling, DEFAULT_STEP};
use crate::policy::{ActuationPolicy, PolicyKind, SamplingPolicy};
use crate::Execution;

/// Slack allowed on a budget after floating-point evaluation.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// How the returned point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjustment {
    /// The closed form, unchanged.
    #[default]
    None,
    /// The closed form left `[0, 1]` through rounding and was clamped.
    Clamped,
    /// The closed form was unusable; the point comes from a grid search.
    GridFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptResult {
    pub policy: SamplingPolicy,
    /// Achieved average AoII.
    pub objective: f64,
    /// Achieved sampling rate.
    pub constraint_value: f64,
    pub eta: f64,
    pub adjustment: Adjustment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuationOptResult {
    pub actuation: ActuationPolicy,
    /// Achieved `P[CoAU = 0]`.
    pub objective: f64,
    /// Achieved actuation rate.
    pub constraint_value: f64,
    pub mu: f64,
    /// The policy never decodes, so `p_c1` never applies and is reported as 1.
    pub vacuous_pc1: bool,
}

fn check_budget(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} out of range: {value} (need 0 < {name} <= 1)"
        )))
    }
}

fn ergodic_p(src: &SourceParams) -> Result<f64> {
    match src.p() {
        p if p > 0.0 => Ok(p),
        _ => Err(Error::DegenerateSource),
    }
}

/// Clamps into `[0, 1]`, reporting whether anything changed. NaN is left
/// alone for the caller to reject.
fn clamp_unit(v: f64, adj: &mut Adjustment) -> f64 {
    if !(0.0..=1.0).contains(&v) && !v.is_nan() {
        *adj = Adjustment::Clamped;
        v.clamp(0.0, 1.0)
    } else {
        v
    }
}

fn evaluate_sampling(
    policy: SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
    adjustment: Adjustment,
) -> Result<SamplingOptResult> {
    Ok(SamplingOptResult {
        objective: avg_aoii(&policy, src, ch)?,
        constraint_value: sampling_rate(&policy, src, ch)?,
        policy,
        eta,
        adjustment,
    })
}

/// Accepts a closed-form point if it is well formed and feasible, otherwise
/// falls back to the grid search for the same family.
fn accept_or_fallback(
    kind: PolicyKind,
    candidate: Option<SamplingPolicy>,
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
    adjustment: Adjustment,
) -> Result<SamplingOptResult> {
    if let Some(policy) = candidate.filter(|p| p.validate().is_ok()) {
        let result = evaluate_sampling(policy, src, ch, eta, adjustment)?;
        if result.objective.is_finite() && result.constraint_value <= eta + BUDGET_TOLERANCE {
            return Ok(result);
        }
    }
    let mut result = grid_search_sampling(kind, src, ch, eta, DEFAULT_STEP, Execution::default())?;
    result.adjustment = Adjustment::GridFallback;
    Ok(result)
}

/// Sampling rate of TARS with `n = 1, p_th = 0`: the largest rate reachable
/// without sampling while synced.
fn tars_n1_floor(src: &SourceParams, ch: &ChannelParams) -> f64 {
    let (n, p, ps) = (src.n() as f64, src.p(), ch.p_s());
    p * (n - 1.0) / (n * p + (1.0 - p) * ps)
}

/// Threshold chosen by the TARS optimum when `eta` is below
/// [`tars_n1_floor`]. Returns `None` when the expression is not finite.
pub(crate) fn tars_threshold(src: &SourceParams, ch: &ChannelParams, eta: f64) -> Option<u32> {
    let (n, p, ps) = (src.n() as f64, src.p(), ch.p_s());
    let num = n * (1.0 - p) * (p + (1.0 - p) * ps) * eta;
    let den = (n - 1.0) * p + (n - 1.0) * (1.0 - p) * ps * eta;
    let raw = ((num / den).ln() / (1.0 - p).ln()).ceil();
    (raw.is_finite() && raw < f64::from(u32::MAX)).then(|| (raw as u32).max(2))
}

pub fn optimize_tars(
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
) -> Result<SamplingOptResult> {
    check_budget("eta", eta)?;
    let p = ergodic_p(src)?;
    let (n, ps) = (src.n() as f64, ch.p_s());
    let mut adj = Adjustment::None;

    let candidate = if tars_n1_floor(src, ch) <= eta {
        let num = eta * (n * p + (1.0 - p) * ps) - p * (n - 1.0);
        let den = p + eta * (n - 1.0) * p * ps - (n * p - 1.0) * ps;
        let p_th = (num / den).min(1.0);
        (p_th.is_finite()).then(|| SamplingPolicy::Tars {
            n: 1,
            p_th: clamp_unit(p_th, &mut adj),
        })
    } else {
        tars_threshold(src, ch, eta).and_then(|thr| {
            let r = 1.0 - p;
            let e = ps + (1.0 - ps) * p;
            let denom = (n - 1.0) * crate::analytic::pow_n(r, u64::from(thr)) * (p + r * eta * ps);
            let p_th = (r / p * (eta * n * r * e / denom - 1.0)).max(0.0);
            p_th.is_finite().then(|| SamplingPolicy::Tars {
                n: thr,
                p_th: clamp_unit(p_th, &mut adj),
            })
        })
    };
    accept_or_fallback(PolicyKind::Tars, candidate, src, ch, eta, adj)
}

pub fn optimize_rs(src: &SourceParams, ch: &ChannelParams, eta: f64) -> Result<SamplingOptResult> {
    check_budget("eta", eta)?;
    evaluate_sampling(
        SamplingPolicy::Rs { p_r: eta },
        src,
        ch,
        eta,
        Adjustment::None,
    )
}

pub fn optimize_sars(
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
) -> Result<SamplingOptResult> {
    check_budget("eta", eta)?;
    let p = ergodic_p(src)?;
    let (n, ps) = (src.n() as f64, ch.p_s());
    let mut adj = Adjustment::None;
    let shared = eta * (n - 1.0) * p * ps + p * p * (n - 1.0);

    let (q_a1, q_a2) = if eta * ps >= p * (n - 1.0) {
        let q1 = ((1.0 - p) * (eta * ps - p * (n - 1.0)) + eta * n * p) / shared;
        (q1.min(1.0), 1.0)
    } else if eta * n * p <= (1.0 - p) * (p * (n - 1.0) - eta * ps) {
        let q2 = eta * n * p / ((1.0 - p) * (p * (n - 1.0) - eta * ps));
        (0.0, q2.min(1.0))
    } else {
        let q1 = (eta * n * p - (1.0 - p) * (p * (n - 1.0) - eta * ps)) / shared;
        (q1.min(1.0), 1.0)
    };
    let candidate = (q_a1.is_finite() && q_a2.is_finite()).then(|| SamplingPolicy::Sars {
        q_a1: clamp_unit(q_a1, &mut adj),
        q_a2: clamp_unit(q_a2, &mut adj),
    });
    accept_or_fallback(PolicyKind::Sars, candidate, src, ch, eta, adj)
}

pub fn optimize_cars(
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
) -> Result<SamplingOptResult> {
    check_budget("eta", eta)?;
    let p = ergodic_p(src)?;
    let p_c = (eta / ((src.n() as f64 - 1.0) * p)).min(1.0);
    evaluate_sampling(SamplingPolicy::Cars { p_c }, src, ch, eta, Adjustment::None)
}

pub fn optimize_sampling(
    kind: PolicyKind,
    src: &SourceParams,
    ch: &ChannelParams,
    eta: f64,
) -> Result<SamplingOptResult> {
    match kind {
        PolicyKind::Rs => optimize_rs(src, ch, eta),
        PolicyKind::Cars => optimize_cars(src, ch, eta),
        PolicyKind::Sars => optimize_sars(src, ch, eta),
        PolicyKind::Tars => optimize_tars(src, ch, eta),
    }
}

/// Optimal `(p_c1, p_c2)` for a fixed RS, SARS or CARS sampling policy.
pub fn optimize_actuation(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    mu: f64,
) -> Result<ActuationOptResult> {
    check_budget("mu", mu)?;
    policy.validate()?;
    let p = ergodic_p(src)?;
    let (n, ps) = (src.n() as f64, ch.p_s());

    // Decode rate, and the branch choice in the policy's own terms.
    let (decode, c2_useless, c2_coeff_in_rate) = match *policy {
        SamplingPolicy::Rs { p_r } => {
            let a = p_r * ps;
            (a, (1.0 - n * p) * a <= (n - 2.0) * p, 1.0 - a)
        }
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            let (a1, a2) = (q_a1 * ps, q_a2 * ps);
            let f = n * p + (1.0 - n) * p * a1 + (1.0 - p) * a2;
            let g = (n - 1.0) * p * ps * (p * (q_a1 - q_a2) + q_a2);
            let idle =
                n * p + (1.0 - n) * p * (1.0 + p) * a1 + (1.0 - p) * (1.0 + (1.0 - n) * p) * a2;
            let useless = p * (n - 1.0) * (1.0 - p) * a1
                <= p * (n - 2.0) - (1.0 - p) * (1.0 + (1.0 - n) * p) * a2;
            (g / f, useless, idle / f)
        }
        SamplingPolicy::Cars { p_c } => {
            let a = p_c * ps;
            let b = (n - 1.0) * p * a;
            (
                b,
                (n - a) * (2.0 * n - 3.0 + (n - 1.0) * p * a) >= 2.0 * (n - 1.0).powi(2),
                1.0 + (1.0 - n) * p * a,
            )
        }
        SamplingPolicy::Tars { .. } => return Err(Error::Unsupported("TARS actuation optimum")),
    };

    let (actuation, vacuous_pc1) = if decode <= 0.0 {
        // Only p_c2 matters; act in undecoded slots only if that helps.
        let gain = p_delta0(
            policy,
            &ActuationPolicy {
                p_c1: 1.0,
                p_c2: 1.0,
            },
            src,
            ch,
        )? - p_delta0(
            policy,
            &ActuationPolicy {
                p_c1: 1.0,
                p_c2: 0.0,
            },
            src,
            ch,
        )?;
        let p_c2 = if gain > 0.0 {
            (mu / c2_coeff_in_rate).min(1.0)
        } else {
            0.0
        };
        (ActuationPolicy { p_c1: 1.0, p_c2 }, true)
    } else if c2_useless {
        (
            ActuationPolicy {
                p_c1: (mu / decode).min(1.0),
                p_c2: 0.0,
            },
            false,
        )
    } else if decode <= mu {
        let p_c2 = ((mu - decode) / c2_coeff_in_rate).min(1.0);
        (ActuationPolicy { p_c1: 1.0, p_c2 }, false)
    } else {
        (
            ActuationPolicy {
                p_c1: (mu / decode).min(1.0),
                p_c2: 0.0,
            },
            false,
        )
    };
    let actuation = ActuationPolicy {
        p_c1: actuation.p_c1.clamp(0.0, 1.0),
        p_c2: actuation.p_c2.clamp(0.0, 1.0),
    };
    Ok(ActuationOptResult {
        objective: p_delta0(policy, &actuation, src, ch)?,
        constraint_value: actuation_rate(policy, &actuation, src, ch)?,
        actuation,
        mu,
        vacuous_pc1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(q: f64, ps: f64) -> (SourceParams, ChannelParams) {
        (
            SourceParams::new(3, q).unwrap(),
            ChannelParams::new(ps).unwrap(),
        )
    }

    #[test]
    fn tars_examples() {
        let (s, c) = setup(0.1, 0.8);
        let r = optimize_tars(&s, &c, 0.3).unwrap();
        let SamplingPolicy::Tars { n, p_th } = r.policy else {
            panic!()
        };
        assert_eq!(n, 2);
        assert!((p_th - 0.307).abs() < 1e-3, "{p_th}");
        assert!(r.constraint_value <= 0.3 + BUDGET_TOLERANCE);

        let (s, c) = setup(0.1, 0.1);
        let r = optimize_tars(&s, &c, 0.48).unwrap();
        let SamplingPolicy::Tars { n, p_th } = r.policy else {
            panic!()
        };
        assert_eq!(n, 2);
        assert!((p_th - 0.474).abs() < 1e-3, "{p_th}");
        assert!((r.objective - 1.3).abs() < 0.01);

        let r = optimize_tars(&s, &c, 1.0).unwrap();
        assert_eq!(r.policy, SamplingPolicy::Tars { n: 1, p_th: 1.0 });
    }

    #[test]
    fn rs_and_cars_examples() {
        let (s, c) = setup(0.1, 0.1);
        assert_eq!(
            optimize_rs(&s, &c, 0.3).unwrap().policy,
            SamplingPolicy::Rs { p_r: 0.3 }
        );
        assert!((optimize_rs(&s, &c, 0.67).unwrap().objective - 1.3).abs() < 0.01);
        let r = optimize_cars(&s, &c, 0.2).unwrap();
        let SamplingPolicy::Cars { p_c } = r.policy else {
            panic!()
        };
        assert_relative_eq!(p_c, 0.2 / 0.9, max_relative = 1e-14);
        assert_eq!(
            optimize_cars(&s, &c, 0.95).unwrap().policy,
            SamplingPolicy::Cars { p_c: 1.0 }
        );
        assert!((optimize_cars(&s, &c, 0.70).unwrap().objective - 1.3).abs() < 0.01);
        let (s1, c1) = setup(0.1, 1.0);
        assert_eq!(optimize_rs(&s1, &c1, 1.0).unwrap().objective, 0.0);
    }

    #[test]
    fn sars_examples() {
        let (s, c) = setup(0.1, 0.1);
        let r = optimize_sars(&s, &c, 0.3).unwrap();
        let SamplingPolicy::Sars { q_a1, q_a2 } = r.policy else {
            panic!()
        };
        assert_eq!(q_a1, 0.0);
        assert!((q_a2 - 0.846).abs() < 1e-3, "{q_a2}");
        assert!((r.objective - 1.3).abs() < 0.01);

        let (s, c) = setup(0.1, 0.95);
        assert_eq!(
            optimize_sars(&s, &c, 1.0).unwrap().policy,
            SamplingPolicy::Sars {
                q_a1: 1.0,
                q_a2: 1.0
            }
        );

        let (s, c) = setup(0.5, 0.5);
        let r = optimize_sars(&s, &c, 1e-9).unwrap();
        let SamplingPolicy::Sars { q_a1, q_a2 } = r.policy else {
            panic!()
        };
        assert_eq!(q_a1, 0.0);
        assert!(q_a2 < 1e-8);
        let idle = avg_aoii(
            &SamplingPolicy::Sars {
                q_a1: 0.0,
                q_a2: 0.0,
            },
            &s,
            &c,
        )
        .unwrap();
        assert_relative_eq!(r.objective, idle, max_relative = 1e-6);
    }

    #[test]
    fn budget_validation() {
        let (s, c) = setup(0.1, 0.5);
        assert!(optimize_rs(&s, &c, 0.0).is_err());
        assert!(optimize_rs(&s, &c, 1.5).is_err());
        assert!(optimize_actuation(&SamplingPolicy::Rs { p_r: 0.5 }, &s, &c, 0.0).is_err());
        assert!(matches!(
            optimize_actuation(&SamplingPolicy::Tars { n: 1, p_th: 0.5 }, &s, &c, 0.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn actuation_examples() {
        let (s, c) = setup(0.1, 0.1);
        let r = optimize_actuation(&SamplingPolicy::Rs { p_r: 0.1 }, &s, &c, 1.0).unwrap();
        assert_eq!(
            r.actuation,
            ActuationPolicy {
                p_c1: 1.0,
                p_c2: 0.0
            }
        );
        assert!((r.objective - 0.67).abs() < 0.01);

        let (s, c) = setup(0.1, 0.9);
        let eta = optimize_cars(&s, &c, 0.1).unwrap();
        let r = optimize_actuation(&eta.policy, &s, &c, 1.0).unwrap();
        assert!((r.objective - 0.71).abs() < 0.01, "{}", r.objective);
    }

    #[test]
    fn actuation_without_decodes_is_vacuous() {
        let (s, c) = setup(0.5, 0.0);
        let r = optimize_actuation(&SamplingPolicy::Rs { p_r: 0.5 }, &s, &c, 0.5).unwrap();
        assert!(r.vacuous_pc1);
        assert_eq!(r.actuation.p_c1, 1.0);
        assert!(r.constraint_value <= 0.5 + BUDGET_TOLERANCE);
    }

    #[test]
    fn minimum_aoii_is_monotone_in_budget() {
        let (s, c) = setup(0.5, 0.5);
        for kind in PolicyKind::ALL {
            let mut last = f64::INFINITY;
            for i in 0..50 {
                let eta = 0.02 + 0.98 * i as f64 / 49.0;
                let v = optimize_sampling(kind, &s, &c, eta).unwrap().objective;
                assert!(v <= last + 1e-12, "{kind} eta={eta}: {v} > {last}");
                last = v;
            }
        }
    }
}
