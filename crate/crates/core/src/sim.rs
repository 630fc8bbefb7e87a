//! Slot-by-slot simulation and replication-based estimates.
//!
//! Within a slot the order is fixed: source transition, sampling decision,
//! channel, reconstruction, AoII update, actuation decision, CoAU update.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{channel_draw, source_step, ChannelParams, SourceParams, TrajectoryState};
use crate::policy::{
    decide_action, decide_sample, ActuationPolicy, SamplerObservation, SamplingPolicy,
};
use crate::rng::RandomStream;

pub const DEFAULT_BURN_IN: u64 = 10_000;

/// z-quantile used for the reported 95% half-widths.
const Z95: f64 = 1.96;

/// Observables of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub t: u64,
    pub x: usize,
    pub xhat: usize,
    pub alpha: bool,
    /// Present iff `alpha`.
    pub h: Option<bool>,
    pub c: bool,
    pub aoii: u64,
    pub delta: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub source: SourceParams,
    pub channel: ChannelParams,
    pub sampling: SamplingPolicy,
    pub actuation: ActuationPolicy,
    /// Retained slots per replication.
    pub slots: u64,
    pub burn_in: u64,
    pub replications: u32,
    pub seed: u64,
}

impl SimConfig {
    /// Config with the default burn-in, one replication and seed 0.
    pub fn new(
        source: SourceParams,
        channel: ChannelParams,
        sampling: SamplingPolicy,
        actuation: ActuationPolicy,
        slots: u64,
    ) -> Self {
        Self {
            source,
            channel,
            sampling,
            actuation,
            slots,
            burn_in: DEFAULT_BURN_IN,
            replications: 1,
            seed: 0,
        }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_replications(mut self, replications: u32) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        ActuationPolicy::new(self.actuation.p_c1, self.actuation.p_c2)?;
        if self.slots < 1 {
            return Err(Error::InvalidConfig("slots must be at least 1".into()));
        }
        if self.burn_in >= self.slots {
            return Err(Error::InvalidConfig(format!(
                "burn-in ({}) must be smaller than slots ({})",
                self.burn_in, self.slots
            )));
        }
        if self.replications < 1 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Cross-replication mean with a 95% half-width, `1.96 * s / sqrt(R)`.
/// With a single replication the half-width is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let r = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / r;
        let half_width = if samples.len() < 2 {
            f64::INFINITY
        } else {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
            Z95 * var.sqrt() / r.sqrt()
        };
        Self { mean, half_width }
    }

    pub fn contains(&self, value: f64) -> bool {
        (value - self.mean).abs() <= self.half_width
    }
}

/// Time averages of one replication over its retained slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationMeans {
    pub aoii: f64,
    pub p_delta0: f64,
    pub sampling_rate: f64,
    pub actuation_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mean_aoii: Estimate,
    pub p_delta0: Estimate,
    pub sampling_rate: Estimate,
    pub actuation_rate: Estimate,
    /// Empirical AoII distribution pooled over all retained slots.
    pub aoii_histogram: BTreeMap<u64, f64>,
    pub replication_means: Vec<ReplicationMeans>,
}

/// Advances the system by one slot.
pub fn step(
    state: &TrajectoryState,
    t: u64,
    cfg: &SimConfig,
    rng: &mut RandomStream,
) -> (TrajectoryState, SlotRecord) {
    let x = source_step(&cfg.source, state.x, rng);
    let obs = SamplerObservation {
        x_t: x,
        x_prev: state.x,
        xhat_prev: state.x_hat,
        aoii_prev: state.aoii,
    };
    let alpha = decide_sample(&cfg.sampling, &obs, rng);
    let h = alpha.then(|| channel_draw(&cfg.channel, rng));
    let decoded = h == Some(true);
    let x_hat = if decoded { x } else { state.x_hat };
    let synced = x == x_hat;
    let aoii = if synced { 0 } else { state.aoii + 1 };
    let c = decide_action(&cfg.actuation, alpha, decoded, rng);
    let delta = if synced == c { 0 } else { state.delta + 1 };

    let next = TrajectoryState {
        x,
        x_hat,
        aoii,
        delta,
        x_prev: state.x,
    };
    let record = SlotRecord {
        t,
        x,
        xhat: x_hat,
        alpha,
        h,
        c,
        aoii,
        delta,
    };
    (next, record)
}

/// Slots `1..=slots` of replication `stream_id`, from the initial state and
/// without burn-in.
pub fn trajectory(cfg: &SimConfig, stream_id: u64, slots: u64) -> Vec<SlotRecord> {
    let mut rng = RandomStream::new(cfg.seed, stream_id);
    let mut state = TrajectoryState::initial();
    let mut out = Vec::with_capacity(slots as usize);
    for t in 1..=slots {
        let (next, record) = step(&state, t, cfg, &mut rng);
        state = next;
        out.push(record);
    }
    out
}

struct ReplicationTotals {
    means: ReplicationMeans,
    histogram: Vec<u64>,
}

fn replicate(cfg: &SimConfig, stream_id: u64) -> ReplicationTotals {
    let mut rng = RandomStream::new(cfg.seed, stream_id);
    let mut state = TrajectoryState::initial();
    for t in 1..=cfg.burn_in {
        state = step(&state, t, cfg, &mut rng).0;
    }
    let mut aoii_sum = 0u64;
    let mut delta0 = 0u64;
    let mut samples = 0u64;
    let mut actions = 0u64;
    let mut histogram = vec![0u64; 64];
    for t in cfg.burn_in + 1..=cfg.burn_in + cfg.slots {
        let (next, rec) = step(&state, t, cfg, &mut rng);
        state = next;
        aoii_sum += rec.aoii;
        delta0 += u64::from(rec.delta == 0);
        samples += u64::from(rec.alpha);
        actions += u64::from(rec.c);
        let level = rec.aoii as usize;
        if level >= histogram.len() {
            histogram.resize(level + 1, 0);
        }
        histogram[level] += 1;
    }
    let n = cfg.slots as f64;
    ReplicationTotals {
        means: ReplicationMeans {
            aoii: aoii_sum as f64 / n,
            p_delta0: delta0 as f64 / n,
            sampling_rate: samples as f64 / n,
            actuation_rate: actions as f64 / n,
        },
        histogram,
    }
}

pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    run_with(cfg, Execution::default())
}

/// Runs `cfg.replications` independent replications (stream id = replication
/// index) and merges them in index order.
pub fn run_with(cfg: &SimConfig, exec: Execution) -> Result<SimReport> {
    cfg.validate()?;
    let reps = exec.map(cfg.replications as usize, |r| replicate(cfg, r as u64));

    let mut pooled: Vec<u64> = Vec::new();
    for rep in &reps {
        if rep.histogram.len() > pooled.len() {
            pooled.resize(rep.histogram.len(), 0);
        }
        for (acc, c) in pooled.iter_mut().zip(&rep.histogram) {
            *acc += c;
        }
    }
    let total: u64 = pooled.iter().sum();
    let aoii_histogram = pooled
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(level, &c)| (level as u64, c as f64 / total as f64))
        .collect();

    let replication_means: Vec<ReplicationMeans> = reps.iter().map(|r| r.means).collect();
    let column = |f: fn(&ReplicationMeans) -> f64| {
        Estimate::from_samples(&replication_means.iter().map(f).collect::<Vec<_>>())
    };
    Ok(SimReport {
        mean_aoii: column(|m| m.aoii),
        p_delta0: column(|m| m.p_delta0),
        sampling_rate: column(|m| m.sampling_rate),
        actuation_rate: column(|m| m.actuation_rate),
        aoii_histogram,
        replication_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(sampling: SamplingPolicy, ps: f64) -> SimConfig {
        SimConfig::new(
            SourceParams::new(3, 0.1).unwrap(),
            ChannelParams::new(ps).unwrap(),
            sampling,
            ActuationPolicy::new(0.7, 0.2).unwrap(),
            5_000,
        )
        .with_burn_in(100)
    }

    #[test]
    fn step_coau_cases() {
        let cfg = config(SamplingPolicy::Rs { p_r: 0.0 }, 0.5);
        // Frozen source, no sampling: stays synced; act always.
        let mut frozen = cfg.clone();
        frozen.source = SourceParams::new(3, 1.0).unwrap();
        frozen.actuation = ActuationPolicy::ALWAYS;
        let mut rng = RandomStream::new(0, 0);
        let s = TrajectoryState {
            delta: 4,
            ..TrajectoryState::initial()
        };
        let (next, rec) = step(&s, 1, &frozen, &mut rng);
        assert_eq!(rec.delta, 0);
        assert_eq!(next.aoii, 0);

        // Erroneous, act -> increment.
        let s = TrajectoryState {
            x: 1,
            x_hat: 0,
            aoii: 3,
            delta: 2,
            x_prev: 1,
        };
        let (next, rec) = step(&s, 1, &frozen, &mut rng);
        assert_eq!((rec.aoii, rec.delta), (4, 3));
        assert_eq!(next.x_prev, 1);
        assert!(rec.h.is_none());
    }

    #[test]
    fn decode_resyncs() {
        let cfg = config(SamplingPolicy::Rs { p_r: 1.0 }, 1.0);
        let s = TrajectoryState {
            x: 1,
            x_hat: 0,
            aoii: 3,
            delta: 0,
            x_prev: 1,
        };
        let mut rng = RandomStream::new(9, 0);
        let (next, rec) = step(&s, 1, &cfg, &mut rng);
        assert_eq!(rec.h, Some(true));
        assert_eq!(next.aoii, 0);
        assert_eq!(next.x, next.x_hat);
    }

    #[test]
    fn always_sample_perfect_channel_has_zero_aoii() {
        let cfg = config(SamplingPolicy::Rs { p_r: 1.0 }, 1.0).with_replications(3);
        let report = run(&cfg).unwrap();
        assert_eq!(report.mean_aoii.mean, 0.0);
        assert_eq!(report.sampling_rate.mean, 1.0);
        assert_eq!(report.aoii_histogram.len(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(SamplingPolicy::Rs { p_r: 0.5 }, 0.5);
        cfg.burn_in = cfg.slots;
        assert!(matches!(run(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = config(SamplingPolicy::Tars { n: 0, p_th: 0.5 }, 0.5);
        assert!(matches!(run(&cfg), Err(Error::InvalidPolicy(_))));
        let cfg = config(SamplingPolicy::Rs { p_r: 0.5 }, 0.5).with_replications(0);
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn histogram_is_normalized() {
        let cfg = config(
            SamplingPolicy::Sars {
                q_a1: 0.3,
                q_a2: 0.8,
            },
            0.6,
        )
        .with_replications(4);
        let report = run(&cfg).unwrap();
        let total: f64 = report.aoii_histogram.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(report.replication_means.len(), 4);
    }

    #[test]
    fn estimate_half_width() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let s = (5.0f64 / 3.0).sqrt();
        assert!((e.half_width - 1.96 * s / 2.0).abs() < 1e-15);
        assert!(Estimate::from_samples(&[1.0]).half_width.is_infinite());
    }
}
