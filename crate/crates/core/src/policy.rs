//! Sampling and actuation policies as decision functions.
//!
//! Every probabilistic decision consumes exactly one uniform from the
//! caller's stream; deterministic decisions (including probabilities of
//! exactly 0 or 1) consume none. Replays depend on this contract.

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingPolicy {
    /// Randomized stationary: sample every slot with probability `p_r`.
    Rs { p_r: f64 },
    /// Change-aware: sample with probability `p_c` only when the source moved.
    Cars { p_c: f64 },
    /// Semantics-aware: sample only when the source differs from the
    /// reconstruction; `q_a1` right after a synced slot, `q_a2` while
    /// the error persists.
    Sars { q_a1: f64, q_a2: f64 },
    /// Threshold-aware: always sample once the previous AoII reaches `n`,
    /// sample with probability `p_th` at AoII `n - 1`.
    Tars { n: u32, p_th: f64 },
}

/// Policy family, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Rs,
    Cars,
    Sars,
    Tars,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Rs,
        PolicyKind::Cars,
        PolicyKind::Sars,
        PolicyKind::Tars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Rs => "rs",
            PolicyKind::Cars => "cars",
            PolicyKind::Sars => "sars",
            PolicyKind::Tars => "tars",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(PolicyKind::Rs),
            "cars" => Ok(PolicyKind::Cars),
            "sars" => Ok(PolicyKind::Sars),
            "tars" => Ok(PolicyKind::Tars),
            other => Err(Error::InvalidParameter(format!(
                "unknown policy '{other}' (expected rs|cars|sars|tars)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyViolation {
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    SarsOrder { q_a1: f64, q_a2: f64 },
    ThresholdBelowOne,
}

impl fmt::Display for PolicyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyViolation::ProbabilityOutOfRange { name, value } => {
                write!(f, "{name} out of range: {value}")
            }
            PolicyViolation::SarsOrder { q_a1, q_a2 } => {
                write!(f, "q_a2 < q_a1 ({q_a2} < {q_a1})")
            }
            PolicyViolation::ThresholdBelowOne => f.write_str("n < 1"),
        }
    }
}

fn check_probability(name: &'static str, value: f64, out: &mut Vec<PolicyViolation>) {
    if !(0.0..=1.0).contains(&value) {
        out.push(PolicyViolation::ProbabilityOutOfRange { name, value });
    }
}

impl SamplingPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            SamplingPolicy::Rs { .. } => PolicyKind::Rs,
            SamplingPolicy::Cars { .. } => PolicyKind::Cars,
            SamplingPolicy::Sars { .. } => PolicyKind::Sars,
            SamplingPolicy::Tars { .. } => PolicyKind::Tars,
        }
    }

    /// The policy's parameters as `(first, second)`; TARS reports `n` as a real.
    pub fn params(&self) -> (f64, Option<f64>) {
        match *self {
            SamplingPolicy::Rs { p_r } => (p_r, None),
            SamplingPolicy::Cars { p_c } => (p_c, None),
            SamplingPolicy::Sars { q_a1, q_a2 } => (q_a1, Some(q_a2)),
            SamplingPolicy::Tars { n, p_th } => (n as f64, Some(p_th)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_policy(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidPolicy(violations))
        }
    }
}

impl fmt::Display for SamplingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SamplingPolicy::Rs { p_r } => write!(f, "RS(p_r={p_r})"),
            SamplingPolicy::Cars { p_c } => write!(f, "CARS(p_c={p_c})"),
            SamplingPolicy::Sars { q_a1, q_a2 } => write!(f, "SARS(q_a1={q_a1}, q_a2={q_a2})"),
            SamplingPolicy::Tars { n, p_th } => write!(f, "TARS(n={n}, p_th={p_th})"),
        }
    }
}

/// Returns every violated invariant; empty when the policy is valid.
pub fn validate_policy(policy: &SamplingPolicy) -> Vec<PolicyViolation> {
    let mut out = Vec::new();
    match *policy {
        SamplingPolicy::Rs { p_r } => check_probability("p_r", p_r, &mut out),
        SamplingPolicy::Cars { p_c } => check_probability("p_c", p_c, &mut out),
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            check_probability("q_a1", q_a1, &mut out);
            check_probability("q_a2", q_a2, &mut out);
            if q_a2 < q_a1 {
                out.push(PolicyViolation::SarsOrder { q_a1, q_a2 });
            }
        }
        SamplingPolicy::Tars { n, p_th } => {
            if n < 1 {
                out.push(PolicyViolation::ThresholdBelowOne);
            }
            check_probability("p_th", p_th, &mut out);
        }
    }
    out
}

/// Randomized actuation: act with `p_c1` after a decoded transmission,
/// with `p_c2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationPolicy {
    pub p_c1: f64,
    pub p_c2: f64,
}

impl ActuationPolicy {
    pub fn new(p_c1: f64, p_c2: f64) -> Result<Self> {
        let mut violations = Vec::new();
        check_probability("p_c1", p_c1, &mut violations);
        check_probability("p_c2", p_c2, &mut violations);
        if violations.is_empty() {
            Ok(Self { p_c1, p_c2 })
        } else {
            Err(Error::InvalidPolicy(violations))
        }
    }

    /// Act in every slot.
    pub const ALWAYS: ActuationPolicy = ActuationPolicy {
        p_c1: 1.0,
        p_c2: 1.0,
    };

    /// Never act.
    pub const NEVER: ActuationPolicy = ActuationPolicy {
        p_c1: 0.0,
        p_c2: 0.0,
    };
}

/// What the sampler sees at the start of slot t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerObservation {
    /// X(t)
    pub x_t: usize,
    /// X(t-1)
    pub x_prev: usize,
    /// X_hat(t-1)
    pub xhat_prev: usize,
    /// AoII(t-1)
    pub aoii_prev: u64,
}

/// Probability that `policy` samples given `obs`.
pub fn sampling_probability(policy: &SamplingPolicy, obs: &SamplerObservation) -> f64 {
    match *policy {
        SamplingPolicy::Rs { p_r } => p_r,
        SamplingPolicy::Cars { p_c } => {
            if obs.x_t == obs.x_prev {
                0.0
            } else {
                p_c
            }
        }
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            if obs.x_prev == obs.xhat_prev {
                if obs.x_t != obs.x_prev {
                    q_a1
                } else {
                    0.0
                }
            } else if obs.x_t != obs.xhat_prev {
                q_a2
            } else {
                0.0
            }
        }
        SamplingPolicy::Tars { n, p_th } => {
            let n = u64::from(n);
            if obs.aoii_prev >= n {
                1.0
            } else if obs.aoii_prev + 1 == n {
                p_th
            } else {
                0.0
            }
        }
    }
}

pub fn decide_sample(
    policy: &SamplingPolicy,
    obs: &SamplerObservation,
    rng: &mut RandomStream,
) -> bool {
    rng.bernoulli(sampling_probability(policy, obs))
}

/// `decoded` implies `sampled`.
pub fn decide_action(
    policy: &ActuationPolicy,
    sampled: bool,
    decoded: bool,
    rng: &mut RandomStream,
) -> bool {
    debug_assert!(!decoded || sampled);
    if sampled && decoded {
        rng.bernoulli(policy.p_c1)
    } else {
        rng.bernoulli(policy.p_c2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(x_t: usize, x_prev: usize, xhat_prev: usize, aoii_prev: u64) -> SamplerObservation {
        SamplerObservation {
            x_t,
            x_prev,
            xhat_prev,
            aoii_prev,
        }
    }

    #[test]
    fn validation() {
        let v = validate_policy(&SamplingPolicy::Sars {
            q_a1: 0.5,
            q_a2: 0.3,
        });
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("q_a2 < q_a1"));

        let v = validate_policy(&SamplingPolicy::Tars { n: 0, p_th: 0.5 });
        assert_eq!(v, vec![PolicyViolation::ThresholdBelowOne]);
        assert_eq!(v[0].to_string(), "n < 1");

        assert!(validate_policy(&SamplingPolicy::Rs { p_r: 0.7 }).is_empty());
        let v = validate_policy(&SamplingPolicy::Sars {
            q_a1: 1.5,
            q_a2: -0.1,
        });
        assert_eq!(v.len(), 3);
        assert!(ActuationPolicy::new(0.5, 1.1).is_err());
    }

    #[test]
    fn cars_skips_unchanged_source() {
        let mut rng = RandomStream::new(0, 0);
        let p = SamplingPolicy::Cars { p_c: 0.9 };
        for _ in 0..100 {
            assert!(!decide_sample(&p, &obs(1, 1, 0, 3), &mut rng));
        }
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn tars_threshold() {
        let mut rng = RandomStream::new(0, 0);
        let p = SamplingPolicy::Tars { n: 2, p_th: 0.5 };
        assert!(decide_sample(&p, &obs(0, 0, 1, 5), &mut rng));
        assert!(!decide_sample(&p, &obs(0, 0, 0, 0), &mut rng));
        assert_eq!(rng.draws(), 0);
        decide_sample(&p, &obs(0, 0, 1, 1), &mut rng);
        assert_eq!(rng.draws(), 1);
        // n = 1 samples while synced with probability p_th.
        let p1 = SamplingPolicy::Tars { n: 1, p_th: 0.3 };
        assert_eq!(sampling_probability(&p1, &obs(0, 0, 0, 0)), 0.3);
    }

    #[test]
    fn sars_conditions() {
        let mut rng = RandomStream::new(0, 0);
        let p = SamplingPolicy::Sars {
            q_a1: 0.3,
            q_a2: 0.8,
        };
        // erroneous before, source returned to the reconstruction
        assert!(!decide_sample(&p, &obs(2, 1, 2, 1), &mut rng));
        assert_eq!(sampling_probability(&p, &obs(1, 0, 0, 0)), 0.3);
        assert_eq!(sampling_probability(&p, &obs(1, 1, 2, 4)), 0.8);
        assert_eq!(sampling_probability(&p, &obs(0, 0, 0, 0)), 0.0);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn sars_equal_probabilities_sample_on_mismatch() {
        let beta = 0.4;
        let p = SamplingPolicy::Sars {
            q_a1: beta,
            q_a2: beta,
        };
        for x_t in 0..3 {
            for x_prev in 0..3 {
                for xhat_prev in 0..3 {
                    let aoii_prev = u64::from(x_prev != xhat_prev);
                    let prob = sampling_probability(&p, &obs(x_t, x_prev, xhat_prev, aoii_prev));
                    let expected = if x_t != xhat_prev { beta } else { 0.0 };
                    assert_eq!(prob, expected, "{x_t} {x_prev} {xhat_prev}");
                }
            }
        }
    }

    #[test]
    fn tars_one_one_matches_rs_one() {
        let a = SamplingPolicy::Tars { n: 1, p_th: 1.0 };
        let b = SamplingPolicy::Rs { p_r: 1.0 };
        let mut ra = RandomStream::new(3, 0);
        let mut rb = RandomStream::new(3, 0);
        for aoii in 0..10 {
            let o = obs(1, 0, 2, aoii);
            assert_eq!(
                decide_sample(&a, &o, &mut ra),
                decide_sample(&b, &o, &mut rb)
            );
        }
        assert_eq!(ra.draws(), rb.draws());
    }

    #[test]
    fn actuation_extremes() {
        let mut rng = RandomStream::new(0, 0);
        let act = ActuationPolicy::new(1.0, 0.0).unwrap();
        assert!(decide_action(&act, true, true, &mut rng));
        assert!(!decide_action(&act, false, false, &mut rng));
        assert!(!decide_action(&act, true, false, &mut rng));
    }

    #[test]
    fn parse_kind() {
        assert_eq!("SARS".parse::<PolicyKind>().unwrap(), PolicyKind::Sars);
        assert!("xyz".parse::<PolicyKind>().is_err());
    }
}
