//! Exact stationary analysis of the truncated joint chain.
//!
//! The state after a slot is `(X, X_hat, level)` where `level` is the AoII,
//! lumped at the truncation level `K` (level `K` stands for every AoII
//! `>= K`). The one-slot kernel is built directly from the slot order of
//! [`crate::sim::step`], marginalizing the source move, the sampling coin and
//! the channel; no closed-form metric is used anywhere in this module.
//!
//! AoII either resets to zero or grows by one, so the chain is level-skip-free
//! and its stationary vector satisfies `u_l = u_0 L_l` with
//! `L_1 = B`, `L_{l+1} = L_l A_l` and `L_K = L_{K-1} A_{K-1} (I - A_K)^-1`,
//! where `B` moves synced states to level 1, `A_l` keeps an error alive from
//! level `l` and `R_l` resynchronizes it. `u_0` then solves the `N x N`
//! system `u_0 (I - C) = 0`, `C = R_0 + sum_l L_l R_l`. A dense solve over
//! the full state space is available for small chains as a cross-check.

pub mod grid;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, SourceParams};
use crate::policy::{sampling_probability, ActuationPolicy, SamplerObservation, SamplingPolicy};

pub const DEFAULT_TRUNCATION: usize = 2000;
pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;
/// Largest chain the dense route will factorize.
pub const DENSE_LIMIT: usize = 2000;
/// Required stationarity residual `max |uP - u|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState {
    pub x: usize,
    pub xhat: usize,
    /// AoII, with the truncation level standing for all larger values.
    pub aoii_level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Level-by-level elimination; exact for any `K`.
    #[default]
    Elimination,
    /// Dense LU over the whole chain (at most [`DENSE_LIMIT`] states).
    Dense,
}

/// Stationary probabilities of what happens in a slot, split by whether the
/// system is synced at its end and whether the sample got through.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EventProbabilities {
    pub synced_idle: f64,
    pub synced_failed: f64,
    pub synced_decoded: f64,
    pub err_idle: f64,
    pub err_failed: f64,
}

impl EventProbabilities {
    fn undecoded(&self) -> f64 {
        self.synced_idle + self.synced_failed + self.err_idle + self.err_failed
    }

    /// `P[CoAU = 0]`: correct when acting on a synced system or holding on an
    /// erroneous one.
    pub fn p_delta0(&self, act: &ActuationPolicy) -> f64 {
        act.p_c1 * self.synced_decoded
            + act.p_c2 * (self.synced_idle + self.synced_failed)
            + (1.0 - act.p_c2) * (self.err_idle + self.err_failed)
    }

    pub fn actuation_rate(&self, act: &ActuationPolicy) -> f64 {
        act.p_c1 * self.synced_decoded + act.p_c2 * self.undecoded()
    }

    pub fn total(&self) -> f64 {
        self.synced_decoded + self.undecoded()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub stationary: Vec<(JointState, f64)>,
    /// Mass per AoII level `0..=K`.
    pub level_marginal: Vec<f64>,
    pub mean_aoii: f64,
    pub events: EventProbabilities,
    pub sampling_rate: f64,
    pub p_delta0: f64,
    pub actuation_rate: f64,
    /// Mass at the truncation level.
    pub tail_mass: f64,
    /// `max |uP - u|` on the full kernel.
    pub residual: f64,
}

impl OracleReport {
    pub fn synced_probability(&self) -> f64 {
        self.level_marginal[0]
    }
}

/// Index layout: the `N` synced states first, then `K` blocks of the
/// `M = N (N - 1)` erroneous pairs.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
    k: usize,
}

impl Layout {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            m: n * (n - 1),
            k,
        }
    }

    fn len(&self) -> usize {
        self.n + self.k * self.m
    }

    fn pair(&self, x: usize, xhat: usize) -> usize {
        debug_assert_ne!(x, xhat);
        x * (self.n - 1) + if xhat > x { xhat - 1 } else { xhat }
    }

    fn index(&self, s: JointState) -> usize {
        if s.aoii_level == 0 {
            s.x
        } else {
            self.n + (s.aoii_level - 1) * self.m + self.pair(s.x, s.xhat)
        }
    }

    fn state(&self, idx: usize) -> JointState {
        if idx < self.n {
            return JointState {
                x: idx,
                xhat: idx,
                aoii_level: 0,
            };
        }
        let off = idx - self.n;
        let (level, e) = (off / self.m + 1, off % self.m);
        let (x, r) = (e / (self.n - 1), e % (self.n - 1));
        let xhat = if r >= x { r + 1 } else { r };
        JointState {
            x,
            xhat,
            aoii_level: level,
        }
    }

    /// Position of `idx` inside its level block.
    fn offset(&self, idx: usize) -> usize {
        if idx < self.n {
            idx
        } else {
            (idx - self.n) % self.m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Idle,
    Failed,
    Decoded,
}

struct Model<'a> {
    policy: &'a SamplingPolicy,
    src: &'a SourceParams,
    ch: &'a ChannelParams,
    layout: Layout,
}

impl Model<'_> {
    /// Every `(next state, probability, outcome)` reachable in one slot.
    fn outcomes(&self, s: JointState, mut visit: impl FnMut(JointState, f64, Outcome)) {
        let (n, q, p, ps) = (self.src.n(), self.src.q(), self.src.p(), self.ch.p_s());
        for x_next in 0..n {
            let move_prob = if x_next == s.x { q } else { p };
            if move_prob == 0.0 {
                continue;
            }
            let obs = SamplerObservation {
                x_t: x_next,
                x_prev: s.x,
                xhat_prev: s.xhat,
                aoii_prev: s.aoii_level as u64,
            };
            let sigma = sampling_probability(self.policy, &obs);
            for (outcome, prob) in [
                (Outcome::Idle, 1.0 - sigma),
                (Outcome::Failed, sigma * (1.0 - ps)),
                (Outcome::Decoded, sigma * ps),
            ] {
                if prob == 0.0 {
                    continue;
                }
                let xhat = if outcome == Outcome::Decoded {
                    x_next
                } else {
                    s.xhat
                };
                let aoii_level = if x_next == xhat {
                    0
                } else {
                    (s.aoii_level + 1).min(self.layout.k)
                };
                visit(
                    JointState {
                        x: x_next,
                        xhat,
                        aoii_level,
                    },
                    move_prob * prob,
                    outcome,
                );
            }
        }
    }

    /// Sparse row of the kernel, destinations merged and sorted.
    fn row(&self, idx: usize) -> Vec<(usize, f64)> {
        let mut entries = Vec::with_capacity(3 * self.src.n());
        self.outcomes(self.layout.state(idx), |dest, prob, _| {
            entries.push((self.layout.index(dest), prob));
        });
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged
    }
}

/// Sparse one-slot transition kernel of the truncated joint chain.
#[derive(Debug, Clone)]
pub struct Kernel {
    layout: Layout,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Kernel {
    pub fn build(
        policy: &SamplingPolicy,
        src: &SourceParams,
        ch: &ChannelParams,
        k: usize,
    ) -> Self {
        let model = Model {
            policy,
            src,
            ch,
            layout: Layout::new(src.n(), k),
        };
        let rows = (0..model.layout.len()).map(|i| model.row(i)).collect();
        Self {
            layout: model.layout,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn state(&self, idx: usize) -> JointState {
        self.layout.state(idx)
    }

    pub fn index(&self, s: JointState) -> usize {
        self.layout.index(s)
    }

    pub fn row(&self, idx: usize) -> &[(usize, f64)] {
        &self.rows[idx]
    }

    /// `max_i |sum_j P_ij - 1|`.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_j |(uP)_j - u_j|`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let mut next = vec![0.0; u.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                next[j] += u[i] * v;
            }
        }
        next.iter()
            .zip(u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn solve_dense(&self) -> Result<Vec<f64>> {
        let s = self.len();
        if s > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dense solve limited to {DENSE_LIMIT} states, chain has {s}"
            )));
        }
        // (P^T - I) u = 0 with the last equation replaced by sum(u) = 1.
        let mut a = DMatrix::<f64>::zeros(s, s);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                a[(j, i)] += v;
            }
        }
        for i in 0..s {
            a[(i, i)] -= 1.0;
            a[(s - 1, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(s);
        rhs[s - 1] = 1.0;
        let u = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NonConvergence("singular dense system".into()))?;
        Ok(u.iter().copied().collect())
    }

    fn solve_elimination(&self) -> Result<Vec<f64>> {
        let Layout { n, m, k } = self.layout;
        let level_of = |j: usize| if j < n { 0 } else { (j - n) / m + 1 };

        // Blocks leaving level `l`: to level 0 and to the next level.
        let blocks = |l: usize| -> (DMatrix<f64>, DMatrix<f64>) {
            let width = if l == 0 { n } else { m };
            let first = if l == 0 { 0 } else { n + (l - 1) * m };
            let mut to_zero = DMatrix::zeros(width, n);
            let mut onward = DMatrix::zeros(width, m);
            for r in 0..width {
                for &(j, v) in &self.rows[first + r] {
                    match level_of(j) {
                        0 => to_zero[(r, j)] += v,
                        _ => onward[(r, self.layout.offset(j))] += v,
                    }
                }
            }
            (to_zero, onward)
        };

        let (r0, b) = blocks(0);
        let mut c = r0;
        let mut weight = DVector::from_element(n, 1.0);
        let ones_m = DVector::from_element(m, 1.0);
        let mut maps: Vec<DMatrix<f64>> = Vec::with_capacity(k);
        let mut current = b;
        for l in 1..=k {
            let (r_l, a_l) = blocks(l);
            if l == k {
                let lhs = DMatrix::<f64>::identity(m, m) - &a_l;
                // current (I - A_K)^-1  <=>  (I - A_K)^T X^T = current^T
                let solved = lhs
                    .transpose()
                    .lu()
                    .solve(&current.transpose())
                    .ok_or(Error::NonErgodic(1.0))?;
                current = solved.transpose();
            }
            c += &current * &r_l;
            weight += &current * &ones_m;
            let next = &current * &a_l;
            maps.push(std::mem::replace(&mut current, next));
        }

        let mut system = (DMatrix::<f64>::identity(n, n) - c).transpose();
        for j in 0..n {
            system[(n - 1, j)] = weight[j];
        }
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let u0 = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NonConvergence("singular synced-level system".into()))?;

        let mut u = Vec::with_capacity(self.len());
        u.extend(u0.iter().copied());
        let u0_row = u0.transpose();
        for map in &maps {
            u.extend((&u0_row * map).iter().copied());
        }
        Ok(u)
    }
}

fn validate_inputs(
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    k: usize,
) -> Result<()> {
    policy.validate()?;
    ActuationPolicy::new(act.p_c1, act.p_c2)?;
    if src.p() <= 0.0 {
        return Err(Error::DegenerateSource);
    }
    let min_k = match *policy {
        SamplingPolicy::Tars { n, .. } => n as usize,
        _ => 1,
    };
    if k < min_k {
        return Err(Error::InvalidParameter(format!(
            "truncation {k} below the smallest usable level {min_k}"
        )));
    }
    Ok(())
}

/// Stationary analysis with the default (elimination) method.
pub fn solve_chain(
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    k: usize,
    tail_bound: f64,
) -> Result<OracleReport> {
    solve_chain_with(
        policy,
        act,
        src,
        ch,
        k,
        tail_bound,
        SolveMethod::Elimination,
    )
}

pub fn solve_chain_with(
    policy: &SamplingPolicy,
    act: &ActuationPolicy,
    src: &SourceParams,
    ch: &ChannelParams,
    k: usize,
    tail_bound: f64,
    method: SolveMethod,
) -> Result<OracleReport> {
    validate_inputs(policy, act, src, k)?;
    let kernel = Kernel::build(policy, src, ch, k);
    let row_error = kernel.max_row_sum_error();
    if row_error > 1e-12 {
        return Err(Error::NonConvergence(format!(
            "kernel rows off by {row_error:e}"
        )));
    }
    let u = match method {
        SolveMethod::Elimination => kernel.solve_elimination()?,
        SolveMethod::Dense => kernel.solve_dense()?,
    };
    let residual = kernel.residual(&u);
    if residual >= RESIDUAL_TOLERANCE || residual.is_nan() {
        return Err(Error::NonConvergence(format!(
            "stationarity residual {residual:e}"
        )));
    }
    let total: f64 = u.iter().sum();
    if (total - 1.0).abs() > 1e-10 || total.is_nan() {
        return Err(Error::NonConvergence(format!(
            "probabilities sum to {total}"
        )));
    }

    let model = Model {
        policy,
        src,
        ch,
        layout: kernel.layout,
    };
    let mut level_marginal = vec![0.0; k + 1];
    let mut events = EventProbabilities::default();
    let mut sampling_rate = 0.0;
    let mut stationary = Vec::with_capacity(u.len());
    for (idx, &mass) in u.iter().enumerate() {
        let s = kernel.state(idx);
        stationary.push((s, mass));
        level_marginal[s.aoii_level] += mass;
        model.outcomes(s, |dest, prob, outcome| {
            let w = mass * prob;
            let synced = dest.aoii_level == 0;
            match (outcome, synced) {
                (Outcome::Idle, true) => events.synced_idle += w,
                (Outcome::Idle, false) => events.err_idle += w,
                (Outcome::Failed, true) => events.synced_failed += w,
                (Outcome::Failed, false) => events.err_failed += w,
                (Outcome::Decoded, _) => events.synced_decoded += w,
            }
            if outcome != Outcome::Idle {
                sampling_rate += w;
            }
        });
    }
    let tail_mass = level_marginal[k];
    if tail_mass > tail_bound {
        return Err(Error::ExcessTailMass {
            mass: tail_mass,
            bound: tail_bound,
        });
    }
    let mean_aoii = level_marginal
        .iter()
        .enumerate()
        .map(|(l, v)| l as f64 * v)
        .sum();
    Ok(OracleReport {
        stationary,
        level_marginal,
        mean_aoii,
        sampling_rate,
        p_delta0: events.p_delta0(act),
        actuation_rate: events.actuation_rate(act),
        events,
        tail_mass,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn src(n: usize, q: f64) -> SourceParams {
        SourceParams::new(n, q).unwrap()
    }

    fn ch(ps: f64) -> ChannelParams {
        ChannelParams::new(ps).unwrap()
    }

    #[test]
    fn layout_round_trips() {
        let layout = Layout::new(4, 7);
        for idx in 0..layout.len() {
            let s = layout.state(idx);
            assert_eq!(layout.index(s), idx);
            assert_eq!(s.aoii_level == 0, s.x == s.xhat);
        }
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        for policy in [
            SamplingPolicy::Rs { p_r: 0.3 },
            SamplingPolicy::Cars { p_c: 0.9 },
            SamplingPolicy::Sars {
                q_a1: 0.1,
                q_a2: 0.5,
            },
            SamplingPolicy::Tars { n: 3, p_th: 0.4 },
        ] {
            let kernel = Kernel::build(&policy, &src(5, 0.1), &ch(0.5), 20);
            assert!(kernel.max_row_sum_error() <= 1e-12);
        }
    }

    #[test]
    fn rs_synced_mass() {
        let r = solve_chain(
            &SamplingPolicy::Rs { p_r: 0.5 },
            &ActuationPolicy::ALWAYS,
            &src(3, 0.1),
            &ch(0.8),
            DEFAULT_TRUNCATION,
            DEFAULT_TAIL_BOUND,
        )
        .unwrap();
        assert!((r.synced_probability() - 0.5537).abs() < 1e-4);
        assert_relative_eq!(r.p_delta0, r.synced_probability(), max_relative = 1e-12);
        assert!((r.mean_aoii - 0.666).abs() < 1e-3);
        assert!(r.residual < RESIDUAL_TOLERANCE);
    }

    #[test]
    fn elimination_matches_dense() {
        let act = ActuationPolicy::new(0.7, 0.2).unwrap();
        for policy in [
            SamplingPolicy::Rs { p_r: 0.3 },
            SamplingPolicy::Cars { p_c: 0.9 },
            SamplingPolicy::Sars {
                q_a1: 0.1,
                q_a2: 0.5,
            },
            SamplingPolicy::Tars { n: 3, p_th: 0.4 },
        ] {
            let (s, c) = (src(3, 0.5), ch(0.6));
            let a = solve_chain_with(&policy, &act, &s, &c, 300, 1e-12, SolveMethod::Elimination)
                .unwrap();
            let b =
                solve_chain_with(&policy, &act, &s, &c, 300, 1e-12, SolveMethod::Dense).unwrap();
            for ((_, x), (_, y)) in a.stationary.iter().zip(&b.stationary) {
                assert!((x - y).abs() < 1e-12);
            }
            assert_relative_eq!(a.p_delta0, b.p_delta0, max_relative = 1e-10);
        }
    }

    #[test]
    fn short_truncation_is_rejected() {
        let err = solve_chain(
            &SamplingPolicy::Rs { p_r: 0.1 },
            &ActuationPolicy::ALWAYS,
            &src(3, 0.8),
            &ch(0.1),
            10,
            1e-12,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExcessTailMass { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let act = ActuationPolicy::ALWAYS;
        assert_eq!(
            solve_chain(
                &SamplingPolicy::Rs { p_r: 0.1 },
                &act,
                &src(3, 1.0),
                &ch(0.5),
                10,
                1.0
            )
            .unwrap_err(),
            Error::DegenerateSource
        );
        assert!(solve_chain(
            &SamplingPolicy::Tars { n: 5, p_th: 0.1 },
            &act,
            &src(3, 0.5),
            &ch(0.5),
            4,
            1.0
        )
        .is_err());
    }
}
