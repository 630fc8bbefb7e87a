//! Empirical frequencies of the random primitives against their laws.

use aoii_core::model::{channel_draw, source_step};
use aoii_core::policy::{decide_sample, SamplerObservation};
use aoii_core::{ChannelParams, RandomStream, SamplingPolicy, SourceParams};

const DRAWS: usize = 1_000_000;

/// Allowed deviation of an empirical frequency: three standard errors, and
/// never less than `4 / sqrt(M)`.
fn tolerance(prob: f64, draws: usize) -> f64 {
    let se = (prob * (1.0 - prob) / draws as f64).sqrt();
    (3.0 * se).max(4.0 / (draws as f64).sqrt())
}

#[test]
fn source_transitions_follow_the_row() {
    for &(n, q) in &[(2, 0.3), (3, 0.1), (5, 0.8), (4, 0.0)] {
        let src = SourceParams::new(n, q).unwrap();
        let mut rng = RandomStream::new(11, n as u64);
        for x in 0..n {
            let mut counts = vec![0usize; n];
            for _ in 0..DRAWS / n {
                counts[source_step(&src, x, &mut rng)] += 1;
            }
            let m = DRAWS / n;
            for (y, &c) in counts.iter().enumerate() {
                let expected = if y == x { q } else { src.p() };
                let freq = c as f64 / m as f64;
                assert!(
                    (freq - expected).abs() <= tolerance(expected, m),
                    "N={n} q={q} {x}->{y}: {freq} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn channel_decodes_at_rate_ps() {
    for ps in [0.1, 0.5, 0.9] {
        let ch = ChannelParams::new(ps).unwrap();
        let mut rng = RandomStream::new(3, 0);
        let hits = (0..DRAWS).filter(|_| channel_draw(&ch, &mut rng)).count();
        let freq = hits as f64 / DRAWS as f64;
        assert!((freq - ps).abs() <= tolerance(ps, DRAWS), "ps={ps}: {freq}");
    }
}

#[test]
fn sampling_coins_follow_the_policy() {
    let obs = SamplerObservation {
        x_t: 1,
        x_prev: 0,
        xhat_prev: 0,
        aoii_prev: 0,
    };
    for (policy, expected) in [
        (SamplingPolicy::Rs { p_r: 0.3 }, 0.3),
        (SamplingPolicy::Cars { p_c: 0.7 }, 0.7),
        (
            SamplingPolicy::Sars {
                q_a1: 0.2,
                q_a2: 0.9,
            },
            0.2,
        ),
        (SamplingPolicy::Tars { n: 1, p_th: 0.4 }, 0.4),
    ] {
        let mut rng = RandomStream::new(5, 1);
        let hits = (0..DRAWS)
            .filter(|_| decide_sample(&policy, &obs, &mut rng))
            .count();
        let freq = hits as f64 / DRAWS as f64;
        assert!(
            (freq - expected).abs() <= tolerance(expected, DRAWS),
            "{policy}: {freq}"
        );
    }
}
