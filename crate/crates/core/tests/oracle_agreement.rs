//! Closed forms against the joint-chain solution on a reduced grid.

use aoii_core::analytic::{actuation_rate, aoii_distribution, avg_aoii, p_delta0, sampling_rate};
use aoii_core::optimize::{optimize_actuation, optimize_sampling};
use aoii_core::oracle::grid::{grid_search_actuation, grid_search_sampling};
use aoii_core::oracle::{solve_chain, DEFAULT_TAIL_BOUND};
use aoii_core::{
    ActuationPolicy, ChannelParams, Execution, PolicyKind, SamplingPolicy, SourceParams,
};

const K: usize = 600;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn policies() -> Vec<SamplingPolicy> {
    vec![
        SamplingPolicy::Rs { p_r: 0.5 },
        SamplingPolicy::Cars { p_c: 0.9 },
        SamplingPolicy::Sars {
            q_a1: 0.1,
            q_a2: 0.9,
        },
        SamplingPolicy::Sars {
            q_a1: 0.5,
            q_a2: 0.5,
        },
        SamplingPolicy::Tars { n: 1, p_th: 0.5 },
        SamplingPolicy::Tars { n: 2, p_th: 0.1 },
        SamplingPolicy::Tars { n: 5, p_th: 0.9 },
    ]
}

#[test]
fn closed_forms_match_the_chain() {
    let act = ActuationPolicy::new(0.9, 0.1).unwrap();
    for &(n, q, ps) in &[(2, 0.1, 0.9), (3, 0.5, 0.5), (5, 0.1, 0.1), (4, 0.3, 0.7)] {
        let (src, ch) = (
            SourceParams::new(n, q).unwrap(),
            ChannelParams::new(ps).unwrap(),
        );
        for policy in policies() {
            let r = solve_chain(&policy, &act, &src, &ch, K, DEFAULT_TAIL_BOUND).unwrap();
            let tag = format!("{policy} N={n} q={q} ps={ps}");
            assert!(
                rel(avg_aoii(&policy, &src, &ch).unwrap(), r.mean_aoii) < 1e-9,
                "{tag}"
            );
            assert!(
                rel(sampling_rate(&policy, &src, &ch).unwrap(), r.sampling_rate) < 1e-9,
                "{tag}"
            );
            let d = aoii_distribution(&policy, &src, &ch, K).unwrap();
            for (a, b) in d.pi.iter().zip(&r.level_marginal) {
                assert!((a - b).abs() < 1e-9, "{tag}");
            }
            if policy.kind() != PolicyKind::Tars {
                assert!(
                    rel(p_delta0(&policy, &act, &src, &ch).unwrap(), r.p_delta0) < 1e-9,
                    "{tag}"
                );
                assert!(
                    rel(
                        actuation_rate(&policy, &act, &src, &ch).unwrap(),
                        r.actuation_rate
                    ) < 1e-9,
                    "{tag}"
                );
            }
        }
    }
}

#[test]
fn closed_form_optima_match_grid_search() {
    for &(n, q, ps) in &[(3, 0.1, 0.1), (2, 0.5, 0.9), (5, 0.8, 0.5)] {
        let (src, ch) = (
            SourceParams::new(n, q).unwrap(),
            ChannelParams::new(ps).unwrap(),
        );
        for eta in [0.1, 0.7] {
            for kind in PolicyKind::ALL {
                let closed = optimize_sampling(kind, &src, &ch, eta).unwrap();
                let grid =
                    grid_search_sampling(kind, &src, &ch, eta, 0.005, Execution::Parallel).unwrap();
                let tag = format!("{kind} N={n} q={q} ps={ps} eta={eta}");
                assert!(
                    closed.objective <= grid.objective + 1e-9,
                    "{tag}: {closed:?} vs {grid:?}"
                );
                assert!(grid.objective - closed.objective <= 0.05, "{tag}");
                if kind == PolicyKind::Tars {
                    continue;
                }
                let act = optimize_actuation(&closed.policy, &src, &ch, 0.3).unwrap();
                let act_grid = grid_search_actuation(
                    &closed.policy,
                    &src,
                    &ch,
                    0.3,
                    0.001,
                    Execution::Parallel,
                )
                .unwrap();
                assert!(
                    act.objective >= act_grid.objective - 1e-9,
                    "{tag}: {act:?} vs {act_grid:?}"
                );
                assert!(act.objective - act_grid.objective <= 0.01, "{tag}");
            }
        }
    }
}
