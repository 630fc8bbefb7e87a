//! Closed-form long-run metrics.
//!
//! Notation used throughout: `p` is the cross-transition probability of the
//! source, `N` its number of states, `p_s` the decoding probability. For the
//! randomized policies `a = (sampling probability) * p_s` is the per-slot
//! probability of a successful update in the states where the policy samples.
//!
//! Every form here is checked against the exact joint-chain solution in
//! [`crate::oracle`] (see the crate's acceptance tests).
//!
//! TARS average AoII: the ratio `F / G` is evaluated with
//!
//! ```text
//! F = (N-1) [ (1-p) (p + (1-p) p_s)^2 + (1-p)^n p_s ( 3p^2 - 2p - n p^2 - p^3
//!       + n p^3 (1-p_th) - p^2 p_th + p^3 p_th
//!       - (1-p) p_s (1 + (n-2) p - (n-1) p^2 (1-p_th)) ) ]
//! G = p (p_s + (1-p_s) p) [ N (1-p) (p_s + (1-p_s) p)
//!       - (N-1) (1-p)^n (1 - (1-p_th) p) p_s ]
//! ```
//!
//! Note the minus sign in front of `(1-p) p_s (...)`: this is the value of
//! `sum_i i * pi_i` for the TARS stationary distribution. The variant with a
//! plus sign that circulates in print disagrees with that sum (and with the
//! joint-chain oracle) whenever `p_s > 0`.

use crate::error::{Error, Result};
use crate::model::{ChannelParams, SourceParams};
use crate::policy::{ActuationPolicy, SamplingPolicy};

/// `base^n`, through `exp(n ln base)` once `n > 64`. Valid for `n <= 10^6`.
pub(crate) fn pow_n(base: f64, n: u64) -> f64 {
    if n <= 64 {
        base.powi(n as i32)
    } else if base <= 0.0 {
        0.0
    } else {
        (n as f64 * base.ln()).exp()
    }
}

fn require_ergodic_source(src: &SourceParams) -> Result<f64> {
    let p = src.p();
    if p <= 0.0 {
        Err(Error::DegenerateSource)
    } else {
        Ok(p)
    }
}

/// Stationary AoII distribution, truncated at level `K` with the exact
/// remainder kept analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct AoiiDistribution {
    /// `pi[i]` for `i = 0..=K`.
    pub pi: Vec<f64>,
    pub truncation: usize,
    /// Probability of AoII > K.
    pub tail_mass: f64,
    /// `sum_{i > K} i * pi_i`.
    pub tail_mean: f64,
}

impl AoiiDistribution {
    /// `sum_{i=1..K} i * pi_i + tail_mean`.
    pub fn mean(&self) -> f64 {
        self.head_mean() + self.tail_mean
    }

    pub fn head_mean(&self) -> f64 {
        self.pi.iter().enumerate().map(|(i, v)| i as f64 * v).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.pi.iter().sum::<f64>() + self.tail_mass
    }
}

/// `pi_0 = head`, `pi_i = scale * ratio^(i-1)` for `i >= 1`.
struct Geometric {
    head: f64,
    scale: f64,
    ratio: f64,
}

impl Geometric {
    fn distribution(&self, k: usize) -> AoiiDistribution {
        let mut pi = Vec::with_capacity(k + 1);
        pi.push(self.head);
        let mut term = self.scale;
        for _ in 1..=k {
            pi.push(term);
            term *= self.ratio;
        }
        let r = self.ratio;
        let rk = pow_n(r, k as u64);
        let kf = k as f64;
        AoiiDistribution {
            pi,
            truncation: k,
            tail_mass: self.scale * rk / (1.0 - r),
            tail_mean: self.scale * ((kf + 1.0) * rk / (1.0 - r) + rk * r / (1.0 - r).powi(2)),
        }
    }
}

fn geometric_form(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> Option<Geometric> {
    let (n, p, ps) = (src.nf(), src.p(), ch.p_s());
    match *policy {
        SamplingPolicy::Rs { p_r } => {
            let a = p_r * ps;
            let head = (p + (1.0 - p) * a) / (n * p + (1.0 - n * p) * a);
            Some(Geometric {
                head,
                scale: (n - 1.0) * p * (1.0 - a) * head,
                ratio: (1.0 - p) * (1.0 - a),
            })
        }
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            let (a1, a2) = (q_a1 * ps, q_a2 * ps);
            let head = (p + (1.0 - p) * a2) / (n * p + p * (1.0 - n) * a1 + (1.0 - p) * a2);
            Some(Geometric {
                head,
                scale: (n - 1.0) * p * (1.0 - a1) * head,
                ratio: (1.0 - p) * (1.0 - a2),
            })
        }
        SamplingPolicy::Cars { p_c } => {
            let a = p_c * ps;
            let head = (1.0 + (n - 2.0) * a) / (n - a);
            Some(Geometric {
                head,
                scale: (n - 1.0) * p * (1.0 - a) * head,
                ratio: 1.0 - p * (1.0 + (n - 2.0) * a),
            })
        }
        SamplingPolicy::Tars { .. } => None,
    }
}

/// Piecewise TARS distribution: `pi_i = c (1-p)^(i-1)` below the threshold,
/// `pi_i = pi_n s^(i-n)` from level `n` on, with `s = (1-p)(1-p_s)`.
struct ThresholdForm {
    n: u64,
    head: f64,
    c: f64,
    r: f64,
    s: f64,
    pi_n: f64,
}

impl ThresholdForm {
    fn new(n_thr: u32, p_th: f64, src: &SourceParams, ch: &ChannelParams) -> Self {
        let (nn, p, ps) = (src.nf(), src.p(), ch.p_s());
        let n = u64::from(n_thr);
        let r = 1.0 - p;
        let s = r * (1.0 - ps);
        let d = p + (1.0 - p) * ps;
        let head = d / (nn * d - (nn - 1.0) * (1.0 - p * (1.0 - p_th)) * ps * pow_n(r, n - 1));
        let c = (nn - 1.0) * p * head;
        let pi_n = c * (1.0 - p_th * ps) * pow_n(r, n - 1);
        Self {
            n,
            head,
            c,
            r,
            s,
            pi_n,
        }
    }

    fn level(&self, i: u64) -> f64 {
        match i {
            0 => self.head,
            i if i < self.n => self.c * pow_n(self.r, i - 1),
            i => self.pi_n * pow_n(self.s, i - self.n),
        }
    }

    /// `sum_{i=1..m} i r^(i-1)`.
    fn weighted_prefix(&self, m: u64) -> f64 {
        let r = self.r;
        let mf = m as f64;
        (1.0 - (mf + 1.0) * pow_n(r, m) + mf * pow_n(r, m + 1)) / (1.0 - r).powi(2)
    }

    /// Mass and first moment of levels `> k`.
    fn tail(&self, k: u64) -> (f64, f64) {
        let mut mass = 0.0;
        let mut moment = 0.0;
        if k + 1 < self.n {
            // levels k+1 ..= n-1
            mass += self.c * (pow_n(self.r, k) - pow_n(self.r, self.n - 1)) / (1.0 - self.r);
            moment += self.c * (self.weighted_prefix(self.n - 1) - self.weighted_prefix(k));
        }
        let m = (k + 1).max(self.n);
        let s = self.s;
        let lead = self.pi_n * pow_n(s, m - self.n);
        mass += lead / (1.0 - s);
        moment += lead * (m as f64 / (1.0 - s) + s / (1.0 - s).powi(2));
        (mass, moment)
    }

    fn mean(&self) -> f64 {
        self.tail(0).1
    }
}

fn tars_mean_closed_form(n_thr: u32, p_th: f64, src: &SourceParams, ch: &ChannelParams) -> f64 {
    let (nn, p, ps) = (src.nf(), src.p(), ch.p_s());
    let n = u64::from(n_thr);
    let nf = n as f64;
    let r = 1.0 - p;
    let rn = pow_n(r, n);
    let d = p + (1.0 - p) * ps;
    let inner = 3.0 * p * p - 2.0 * p - nf * p * p - p.powi(3) + nf * p.powi(3) * (1.0 - p_th)
        - p * p * p_th
        + p.powi(3) * p_th
        - (1.0 - p) * ps * (1.0 + (nf - 2.0) * p - (nf - 1.0) * p * p * (1.0 - p_th));
    let f = (nn - 1.0) * (r * d * d + rn * ps * inner);
    let e = ps + (1.0 - ps) * p;
    let g = p * e * (nn * r * e - (nn - 1.0) * rn * (1.0 - (1.0 - p_th) * p) * ps);
    f / g
}

/// Long-run average AoII.
pub fn avg_aoii(policy: &SamplingPolicy, src: &SourceParams, ch: &ChannelParams) -> Result<f64> {
    policy.validate()?;
    let p = require_ergodic_source(src)?;
    let (n, ps) = (src.nf(), ch.p_s());
    let value = match *policy {
        SamplingPolicy::Rs { p_r } => {
            let a = p_r * ps;
            (n - 1.0) * p * (1.0 - a) / ((p + (1.0 - p) * a) * (a + n * p * (1.0 - a)))
        }
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            let (a1, a2) = (q_a1 * ps, q_a2 * ps);
            (n - 1.0) * p * (1.0 - a1)
                / ((p + (1.0 - p) * a2) * (n * p + (1.0 - n) * p * a1 + (1.0 - p) * a2))
        }
        SamplingPolicy::Cars { p_c } => {
            let a = p_c * ps;
            (n - 1.0) * (1.0 - a) / (p * (n - a) * (1.0 + (n - 2.0) * a))
        }
        SamplingPolicy::Tars { n: thr, p_th } => {
            let v = tars_mean_closed_form(thr, p_th, src, ch);
            if v.is_finite() {
                v
            } else {
                // F and G both vanish at p = 1; the level sum stays finite.
                ThresholdForm::new(thr, p_th, src, ch).mean()
            }
        }
    };
    Ok(value)
}

/// Stationary AoII distribution up to level `k`, plus the exact tail.
pub fn aoii_distribution(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    k: usize,
) -> Result<AoiiDistribution> {
    policy.validate()?;
    if k < 1 {
        return Err(Error::InvalidParameter(
            "truncation K must be at least 1".into(),
        ));
    }
    let p = src.p();
    if p <= 0.0 {
        return Err(Error::NonErgodic(1.0 - p));
    }
    if let Some(geo) = geometric_form(policy, src, ch) {
        if geo.ratio >= 1.0 || geo.ratio.is_nan() {
            return Err(Error::NonErgodic(geo.ratio));
        }
        return Ok(geo.distribution(k));
    }
    let SamplingPolicy::Tars { n, p_th } = *policy else {
        unreachable!("non-geometric forms are TARS only")
    };
    let form = ThresholdForm::new(n, p_th, src, ch);
    if form.s >= 1.0 || form.s.is_nan() {
        return Err(Error::NonErgodic(form.s));
    }
    let pi = (0..=k as u64).map(|i| form.level(i)).collect();
    let (tail_mass, tail_mean) = form.tail(k as u64);
    Ok(AoiiDistribution {
        pi,
        truncation: k,
        tail_mass,
        tail_mean,
    })
}

/// Probability that the system is synced in steady state.
pub fn synced_probability(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> Result<f64> {
    Ok(aoii_distribution(policy, src, ch, 1)?.pi[0])
}

/// Long-run fraction of slots in which a sample is taken.
pub fn sampling_rate(
    policy: &SamplingPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> Result<f64> {
    policy.validate()?;
    if let SamplingPolicy::Rs { p_r } = *policy {
        return Ok(p_r);
    }
    let p = require_ergodic_source(src)?;
    let (n, ps) = (src.nf(), ch.p_s());
    let value = match *policy {
        SamplingPolicy::Rs { .. } => unreachable!(),
        SamplingPolicy::Cars { p_c } => (n - 1.0) * p * p_c,
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            p * (n - 1.0) * (p * (q_a1 - q_a2) + q_a2)
                / (n * p - (n - 1.0) * p * q_a1 * ps + (1.0 - p) * q_a2 * ps)
        }
        SamplingPolicy::Tars { n: 1, p_th } => {
            (p * (n - 1.0) + (p - (n * p - 1.0) * ps) * p_th)
                / (n * p + (1.0 - p) * ps - (n - 1.0) * p * p_th * ps)
        }
        SamplingPolicy::Tars { n: thr, p_th } => {
            let thr = u64::from(thr);
            let r = 1.0 - p;
            let keep = 1.0 - (1.0 - p_th) * p;
            (n - 1.0) * p * pow_n(r, thr - 1) * keep
                / (n * r * (p + r * ps) - (n - 1.0) * pow_n(r, thr) * keep * ps)
        }
    };
    Ok(value)
}

/// Probability that the CoAU is zero, i.e. that the actuator's decision in a
/// slot is correct.
pub fn p_delta0(
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> Result<f64> {
    policy.validate()?;
    ActuationPolicy::new(act.p_c1, act.p_c2)?;
    let p = require_ergodic_source(src)?;
    let (n, ps) = (src.nf(), ch.p_s());
    let (c1, c2) = (act.p_c1, act.p_c2);
    let value = match *policy {
        SamplingPolicy::Rs { p_r } => {
            let a = p_r * ps;
            let d = n * p + (1.0 - n * p) * a;
            (n - 1.0) * p * (1.0 - a) / d
                + a * c1
                + (1.0 - a) * (2.0 * p - n * p + (1.0 - n * p) * a) * c2 / d
        }
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            let (a1, a2) = (q_a1 * ps, q_a2 * ps);
            let f = n * p + (1.0 - n) * p * a1 + (1.0 - p) * a2;
            let g = (n - 1.0) * p * ps * (p * (q_a1 - q_a2) + q_a2);
            ((n - 1.0) * p * (1.0 - a1)
                + g * c1
                + p * (2.0 - n + (n - 1.0) * (1.0 - p) * a1) * c2
                + (1.0 - p) * (1.0 + (1.0 - n) * p) * a2 * c2)
                / f
        }
        SamplingPolicy::Cars { p_c } => {
            let a = p_c * ps;
            (n - 1.0) * (1.0 - a) / (n - a)
                + (n - 1.0) * p * a * c1
                + (3.0 - 2.0 * n - (n - 1.0) * p * a + 2.0 * (n - 1.0).powi(2) / (n - a)) * c2
        }
        SamplingPolicy::Tars { .. } => return Err(Error::Unsupported("TARS P[CoAU = 0]")),
    };
    Ok(value)
}

/// Long-run fraction of slots in which the actuator acts.
pub fn actuation_rate(
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
) -> Result<f64> {
    policy.validate()?;
    ActuationPolicy::new(act.p_c1, act.p_c2)?;
    let (c1, c2) = (act.p_c1, act.p_c2);
    if let SamplingPolicy::Rs { p_r } = *policy {
        let a = p_r * ch.p_s();
        return Ok(a * c1 + (1.0 - a) * c2);
    }
    let p = require_ergodic_source(src)?;
    let (n, ps) = (src.nf(), ch.p_s());
    let value = match *policy {
        SamplingPolicy::Rs { .. } => unreachable!(),
        SamplingPolicy::Sars { q_a1, q_a2 } => {
            let (a1, a2) = (q_a1 * ps, q_a2 * ps);
            let f = n * p + (1.0 - n) * p * a1 + (1.0 - p) * a2;
            let g = (n - 1.0) * p * ps * (p * (q_a1 - q_a2) + q_a2);
            let idle =
                n * p + (1.0 - n) * p * (1.0 + p) * a1 + (1.0 - p) * (1.0 + (1.0 - n) * p) * a2;
            (g * c1 + idle * c2) / f
        }
        SamplingPolicy::Cars { p_c } => {
            let b = (n - 1.0) * p * p_c * ps;
            b * c1 + (1.0 - b) * c2
        }
        SamplingPolicy::Tars { .. } => return Err(Error::Unsupported("TARS actuation rate")),
    };
    Ok(value)
}
