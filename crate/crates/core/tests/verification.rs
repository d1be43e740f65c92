use qgame::distributions::DistributionSpec;
use qgame::models::{GameModel, ParallelQueuesModel};
use qgame::verify::{epsilon_gap, estimate_values, mm1_join_utility, mm1_oracles, Budget, VerifyConfig};
use qgame::{BehavioralStrategy, SimplexPoint};

fn sp(v: &[f64]) -> BehavioralStrategy {
    SimplexPoint::new(v.to_vec()).unwrap().into()
}

#[test]
fn mm1_join_value_inside_interval() {
    let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
    let est = estimate_values(&m, &sp(&[1.0, 0.0]), &VerifyConfig::new(Budget::Cycles(100_000), 31)).unwrap();
    let u = est.utilities()[0];
    assert!((u - 3.0).abs() <= est.half_widths[0][0], "{u} +- {}", est.half_widths[0][0]);
    assert_eq!(est.utilities()[1], 0.0);
    assert_eq!(est.cycles, 100_000);
}

#[test]
fn half_width_shrinks_like_root_budget() {
    let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
    let p = sp(&[0.8, 0.2]);
    let small = estimate_values(&m, &p, &VerifyConfig::new(Budget::Cycles(10_000), 32)).unwrap();
    let large = estimate_values(&m, &p, &VerifyConfig::new(Budget::Cycles(100_000), 33)).unwrap();
    let ratio = small.half_widths[0][0] / large.half_widths[0][0];
    assert!((2.5..=4.0).contains(&ratio), "shrink ratio {ratio}");
}

#[test]
fn certificate_tightens_with_budget() {
    let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
    let p = sp(&[0.6, 0.4]);
    let mean_hi = |cycles: u64| {
        (0..5)
            .map(|seed| {
                let est = estimate_values(&m, &p, &VerifyConfig::new(Budget::Cycles(cycles), 40 + seed)).unwrap();
                epsilon_gap(&est, &p).unwrap().epsilon_hi
            })
            .sum::<f64>()
            / 5.0
    };
    let (a, b) = (mean_hi(5_000), mean_hi(50_000));
    assert!(b <= a, "{b} > {a}");
}

#[test]
fn oracle_equilibrium_certifies_itself() {
    // Interior equilibrium at load 0.5.
    let (lambda, mu, r, c) = (2.0, 1.0, 2.0, 1.0);
    let pe = mm1_oracles(Some(lambda), mu, r, c).unwrap().p_e.unwrap();
    assert!(mm1_join_utility(pe * lambda, mu, r, c).unwrap().abs() < 1e-12);
    let m = ParallelQueuesModel::mm1(lambda, mu, r, c).unwrap();
    let p = sp(&[pe, 1.0 - pe]);
    let est = estimate_values(&m, &p, &VerifyConfig::new(Budget::Cycles(3_000_000), 34)).unwrap();
    let cert = epsilon_gap(&est, &p).unwrap().with_target(0.05);
    assert_eq!(cert.certified, Some(true), "{cert:?}");
    assert!(est.utilities()[0].abs() <= est.half_widths[0][0]);
}

#[test]
fn dominated_strategy_is_not_certified() {
    // Joining costs more than the reward even at an empty queue.
    let m = ParallelQueuesModel::mm1(0.5, 1.0, 0.5, 1.0).unwrap();
    let p = sp(&[1.0, 0.0]);
    let est = estimate_values(&m, &p, &VerifyConfig::new(Budget::Cycles(20_000), 35)).unwrap();
    let cert = epsilon_gap(&est, &p).unwrap().with_target(0.05);
    assert_eq!(cert.certified, Some(false));
    assert!(cert.epsilon_hat > 0.5);
    assert!(cert.epsilon_hi >= cert.epsilon_hat);
}

#[test]
fn arrival_budget_and_parallel_merge_are_deterministic() {
    let m = ParallelQueuesModel::new(
        &DistributionSpec::Gamma { shape: 0.5, scale: 2.0 },
        &[
            qgame::models::StationSpec { service: DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }, reward: 5.0, cost: 1.0 },
            qgame::models::StationSpec { service: DistributionSpec::Exponential { rate: 1.0 }, reward: 5.0, cost: 1.0 },
        ],
    )
    .unwrap();
    let p = sp(&[0.4, 0.4, 0.2]);
    let cfg = VerifyConfig::new(Budget::Arrivals(300_000), 36);
    let a = estimate_values(&m, &p, &cfg).unwrap();
    let b = estimate_values(&m, &p, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.arrivals >= 300_000);
    assert_eq!(a.values.len(), m.signal_count());
    assert_eq!(a.values[0].len(), 3);
}
