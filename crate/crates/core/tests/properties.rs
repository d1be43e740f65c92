mod common;

use proptest::prelude::*;
use qgame::distributions::DistributionSpec;
use qgame::estimator::{per_signal_g, raw_g};
use qgame::models::{simulate_cycle, GameModel, ObservableGG1Model, ParallelQueuesModel};
use qgame::rng::{substream, Domain};
use qgame::sa_engine::{run_observable, run_unobservable, RunConfig, StepSchedule};
use qgame::simplex::{project_capped_simplex, project_hyperplane, project_simplex};
use qgame::{BehavioralStrategy, SimplexPoint};

use common::grid_projection;

fn vector(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    (2..=max_k).prop_flat_map(|k| prop::collection::vec(-10.0f64..10.0, k))
}

fn point_and_direction() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=8usize).prop_flat_map(|k| {
        (
            prop::collection::vec(0.0f64..1.0, k),
            prop::collection::vec(-10.0f64..10.0, k),
        )
    })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn projection_satisfies_kkt(x in vector(10)) {
        let y = project_simplex(&x).unwrap();
        let y = y.probs();
        prop_assert!(y.iter().all(|&v| v >= 0.0));
        prop_assert!((y.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let i = (0..y.len()).find(|&i| y[i] > 0.0).unwrap();
        let tau = x[i] - y[i];
        for j in 0..y.len() {
            if y[j] > 0.0 {
                prop_assert!((x[j] - y[j] - tau).abs() <= 1e-10);
            } else {
                prop_assert!(x[j] - tau <= 1e-10);
            }
        }
    }

    #[test]
    fn projection_is_idempotent(x in vector(10)) {
        let once = project_simplex(&x).unwrap();
        let twice = project_simplex(once.probs()).unwrap();
        prop_assert_eq!(once.probs(), twice.probs());
    }

    #[test]
    fn only_the_hyperplane_component_matters((raw, x) in point_and_direction()) {
        let total: f64 = raw.iter().sum::<f64>() + 1e-3;
        let p: Vec<f64> = raw.iter().map(|v| (v + 1e-3 / raw.len() as f64) / total).collect();
        let hx = project_hyperplane(&x).unwrap();
        let a: Vec<f64> = p.iter().zip(&x).map(|(p, x)| p + x).collect();
        let b: Vec<f64> = p.iter().zip(&hx).map(|(p, h)| p + h).collect();
        let pa = project_simplex(&a).unwrap();
        let pb = project_simplex(&b).unwrap();
        for (u, v) in pa.probs().iter().zip(pb.probs()) {
            prop_assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn hyperplane_projection_is_idempotent(x in vector(10)) {
        let h = project_hyperplane(&x).unwrap();
        prop_assert!(h.iter().sum::<f64>().abs() <= 1e-12 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()));
        let hh = project_hyperplane(&h).unwrap();
        for (a, b) in h.iter().zip(&hh) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn capped_projection_stays_in_box(x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let lower = [0.1, 0.0, 0.0];
        let upper = [1.0, 0.6, 0.5];
        let y = project_capped_simplex(&x, &lower, &upper).unwrap();
        for (i, v) in y.probs().iter().enumerate() {
            prop_assert!(*v >= lower[i] - 1e-12 && *v <= upper[i] + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn projection_beats_every_grid_point(x in prop::collection::vec(-2.0f64..2.0, 2..=3)) {
        let y = project_simplex(&x).unwrap();
        let d = dist2(&x, y.probs()).sqrt();
        let steps = if x.len() == 2 { 2_000 } else { 120 };
        let h = 1.0 / steps as f64;
        // Every grid point is at least as far as the projection.
        if x.len() == 2 {
            for i in 0..=steps {
                let q = [i as f64 * h, 1.0 - i as f64 * h];
                prop_assert!(d <= dist2(&x, &q).sqrt() + 1e-9);
            }
        } else {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let q = [i as f64 * h, j as f64 * h, 1.0 - (i + j) as f64 * h];
                    prop_assert!(d <= dist2(&x, &q).sqrt() + 1e-9);
                }
            }
        }
        // And the best grid point is within one cell of the projection.
        let g = grid_projection(&x, steps);
        prop_assert!(dist2(&g, y.probs()).sqrt() <= 2.0 * h);
    }

    #[test]
    fn per_signal_columns_add_up(seed in any::<u64>(), q0 in 0.0f64..1.0, q1 in 0.0f64..1.0) {
        let exp = DistributionSpec::Exponential { rate: 1.0 };
        let m = ObservableGG1Model::new(&exp, &DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }, 2.5, 1.0).unwrap();
        let s = BehavioralStrategy::new(vec![
            SimplexPoint::new(vec![q0, 1.0 - q0]).unwrap(),
            SimplexPoint::new(vec![q1, 1.0 - q1]).unwrap(),
            SimplexPoint::new(vec![0.5, 0.5]).unwrap(),
        ]).unwrap();
        let rec = simulate_cycle(&m, &s, None, &mut substream(seed, Domain::Test, 0)).unwrap();
        let cols = per_signal_g(&rec, m.signal_count()).unwrap();
        let g = raw_g(&rec);
        let scale = 1.0 + rec.vbar_rows().flatten().map(|v| v.abs()).sum::<f64>();
        for i in 0..2 {
            let sum: f64 = cols.iter().map(|c| c[i]).sum();
            prop_assert!((sum - g[i]).abs() <= 1e-12 * scale);
        }
        prop_assert_eq!(rec.cycle_length(), rec.signals().len());
    }

    #[test]
    fn single_signal_column_is_raw_g(seed in any::<u64>(), q in 0.0f64..1.0) {
        let m = ParallelQueuesModel::mm1(0.8, 1.0, 5.0, 1.0).unwrap();
        let s: BehavioralStrategy = SimplexPoint::new(vec![q, 1.0 - q]).unwrap().into();
        let rec = simulate_cycle(&m, &s, None, &mut substream(seed, Domain::Test, 1)).unwrap();
        prop_assert_eq!(&per_signal_g(&rec, 1).unwrap()[0], &raw_g(&rec));
    }

    #[test]
    fn capped_cycle_is_prefix(seed in any::<u64>(), cap in 1usize..40) {
        let m = ParallelQueuesModel::mm1(0.95, 1.0, 5.0, 1.0).unwrap();
        let s: BehavioralStrategy = SimplexPoint::new(vec![1.0, 0.0]).unwrap().into();
        let full = simulate_cycle(&m, &s, None, &mut substream(seed, Domain::Test, 2)).unwrap();
        let capped = simulate_cycle(&m, &s, Some(cap), &mut substream(seed, Domain::Test, 2)).unwrap();
        let n = capped.cycle_length();
        prop_assert_eq!(n, full.cycle_length().min(cap));
        prop_assert_eq!(capped.truncated(), full.cycle_length() > cap);
        let a: Vec<f64> = full.vbar_rows().take(n).flatten().copied().collect();
        let b: Vec<f64> = capped.vbar_rows().flatten().copied().collect();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_deterministic_and_feasible(seed in any::<u64>(), gamma0 in 0.05f64..5.0, q in 0.0f64..1.0) {
        let m = ParallelQueuesModel::mm1(0.7, 1.0, 3.0, 1.0).unwrap();
        let init = SimplexPoint::new(vec![q, 1.0 - q]).unwrap();
        let cfg = RunConfig::new(3_000, seed, init)
            .with_step(StepSchedule::harmonic(gamma0))
            .with_log_stride(1);
        let a = run_unobservable(&m, &cfg).unwrap();
        let b = run_unobservable(&m, &cfg).unwrap();
        prop_assert_eq!(format!("{:?}", a.points), format!("{:?}", b.points));
        for pt in &a.points {
            let v = pt.strategy.at(0).probs();
            prop_assert!(v.iter().all(|&x| x >= 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn observable_iterates_stay_feasible(seed in any::<u64>()) {
        let exp = DistributionSpec::Exponential { rate: 1.0 };
        let m = ObservableGG1Model::new(&exp, &exp, 3.2, 1.0).unwrap();
        let init = BehavioralStrategy::constant(SimplexPoint::uniform(2).unwrap(), m.signal_count()).unwrap();
        let t = run_observable(&m, &RunConfig::new(2_000, seed, init).with_log_stride(1)).unwrap();
        for pt in &t.points {
            for p in pt.strategy.per_signal() {
                prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
                prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
