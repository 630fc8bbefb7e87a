//! Source, channel and per-slot system state.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Symmetric N-state Markov source: stay with probability `q`, move to each
/// of the other `N - 1` states with probability `p = (1 - q) / (N - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    n: usize,
    q: f64,
    p: f64,
}

impl SourceParams {
    pub fn new(n: usize, q: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N out of range: {n} (need N >= 2)"
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "q out of range: {q} (need 0 <= q <= 1)"
            )));
        }
        let p = (1.0 - q) / (n - 1) as f64;
        let total = q + (n - 1) as f64 * p;
        assert!(
            (total - 1.0).abs() <= 1e-15,
            "row sum {total} for N={n}, q={q}"
        );
        Ok(Self { n, q, p })
    }

    /// Number of source states.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Probability of moving to one specific other state.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub(crate) fn nf(&self) -> f64 {
        self.n as f64
    }
}

/// Erasure channel: a transmitted sample is decoded with probability `p_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    p_s: f64,
}

impl ChannelParams {
    pub fn new(p_s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_s) {
            return Err(Error::InvalidParameter(format!(
                "ps out of range: {p_s} (need 0 <= ps <= 1)"
            )));
        }
        Ok(Self { p_s })
    }

    pub fn p_s(&self) -> f64 {
        self.p_s
    }
}

/// System state at the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrajectoryState {
    pub x: usize,
    pub x_hat: usize,
    pub aoii: u64,
    pub delta: u64,
    /// Source state one slot earlier.
    pub x_prev: usize,
}

impl TrajectoryState {
    /// X(0) = X_hat(0) = 0 with AoII and CoAU at zero.
    pub fn initial() -> Self {
        Self::default()
    }

    pub fn is_synced(&self) -> bool {
        self.x == self.x_hat
    }
}

/// One source transition. Consumes one uniform unless the move is forced
/// (`q = 1`, or `q = 0` with two states).
pub fn source_step(params: &SourceParams, x: usize, rng: &mut RandomStream) -> usize {
    debug_assert!(x < params.n);
    let q = params.q;
    if q >= 1.0 {
        return x;
    }
    let others = params.n - 1;
    if q <= 0.0 && others == 1 {
        return 1 - x;
    }
    let u = rng.uniform();
    if u < q {
        return x;
    }
    // (u - q) / (1 - q) is uniform on [0, 1) given u >= q.
    let k = (((u - q) / (1.0 - q)) * others as f64) as usize;
    let k = k.min(others - 1);
    if k >= x {
        k + 1
    } else {
        k
    }
}

/// Decoding outcome of one transmission.
pub fn channel_draw(ch: &ChannelParams, rng: &mut RandomStream) -> bool {
    rng.bernoulli(ch.p_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_cross_probability() {
        let s = SourceParams::new(3, 0.1).unwrap();
        assert!((s.p() - 0.45).abs() < 1e-15);
        assert_eq!(SourceParams::new(2, 1.0).unwrap().p(), 0.0);
        assert!((SourceParams::new(5, 0.2).unwrap().p() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_source() {
        assert!(SourceParams::new(1, 0.5).is_err());
        let err = SourceParams::new(3, 1.2).unwrap_err();
        assert!(err.to_string().contains("q out of range"));
        assert!(SourceParams::new(3, -0.1).is_err());
        assert!(SourceParams::new(3, f64::NAN).is_err());
        assert!(ChannelParams::new(1.5).is_err());
    }

    #[test]
    fn forced_transitions() {
        let mut rng = RandomStream::new(1, 0);
        let frozen = SourceParams::new(4, 1.0).unwrap();
        for x in 0..4 {
            assert_eq!(source_step(&frozen, x, &mut rng), x);
        }
        let flip = SourceParams::new(2, 0.0).unwrap();
        assert_eq!(source_step(&flip, 0, &mut rng), 1);
        assert_eq!(source_step(&flip, 1, &mut rng), 0);
        assert_eq!(rng.draws(), 0);
    }

    #[test]
    fn channel_extremes() {
        let mut rng = RandomStream::new(1, 0);
        assert!(channel_draw(&ChannelParams::new(1.0).unwrap(), &mut rng));
        assert!(!channel_draw(&ChannelParams::new(0.0).unwrap(), &mut rng));
    }

    #[test]
    fn zero_q_never_stays() {
        let s = SourceParams::new(4, 0.0).unwrap();
        let mut rng = RandomStream::new(5, 0);
        for _ in 0..10_000 {
            let x = 2;
            assert_ne!(source_step(&s, x, &mut rng), x);
        }
    }
}
