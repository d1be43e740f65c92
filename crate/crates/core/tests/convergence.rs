use qgame::distributions::DistributionSpec;
use qgame::models::{GameModel, ObservableGG1Model, ParallelQueuesModel, SensingModel};
use qgame::sa_engine::{run_observable, run_unobservable, RunConfig, StepSchedule, TruncationSchedule};
use qgame::verify::{epsilon_gap, estimate_values, mm1_oracles, Budget, VerifyConfig};
use qgame::{BehavioralStrategy, SimplexPoint};

fn certify(model: &dyn GameModel, p: &BehavioralStrategy, budget: Budget) -> f64 {
    let mut cfg = VerifyConfig::new(budget, 50);
    cfg.alpha = 0.01;
    let est = estimate_values(model, p, &cfg).unwrap();
    let cert = epsilon_gap(&est, p).unwrap().with_target(0.05);
    assert_eq!(cert.certified, Some(true), "{p}: {cert:?} {est:?}");
    cert.epsilon_hi
}

#[test]
fn unstable_mm1_with_truncation_reaches_equilibrium() {
    // p_e = 0.25 puts the queue at load 0.5; the uniform start overloads it.
    let m = ParallelQueuesModel::mm1(2.0, 1.0, 2.0, 1.0).unwrap();
    let pe = mm1_oracles(Some(2.0), 1.0, 2.0, 1.0).unwrap().p_e.unwrap();
    let cfg = RunConfig::new(200_000, 60, SimplexPoint::uniform(2).unwrap())
        .with_truncation(TruncationSchedule::Linear { kappa: 1.0 });
    let t = run_unobservable(&m, &cfg).unwrap();
    assert!((t.final_strategy.at(0).probs()[0] - pe).abs() <= 0.02, "{}", t.final_strategy);
    assert!(t.totals.cap_hits > 0);
    certify(&m, &t.final_strategy, Budget::Cycles(3_000_000));
}

#[test]
fn sensing_model_with_controls_and_dynamic_steps() {
    let m = SensingModel::new(0.8, &DistributionSpec::Exponential { rate: 1.0 }, 5.0, 1.0).unwrap();
    let cfg = RunConfig::new(100_000, 61, SimplexPoint::uniform(2).unwrap())
        .with_step(StepSchedule { gamma0: 1.0, dynamic_divisor: true })
        .with_control_variates(true);
    let t = run_unobservable(&m, &cfg).unwrap();
    certify(&m, &t.final_strategy, Budget::Cycles(12_000_000));
}

#[test]
fn observable_exponential_queue_learns_threshold() {
    let exp = DistributionSpec::Exponential { rate: 1.0 };
    let m = ObservableGG1Model::new(&exp, &exp, 1.7, 1.0).unwrap();
    let init = BehavioralStrategy::constant(SimplexPoint::uniform(2).unwrap(), 2).unwrap();
    let t = run_observable(&m, &RunConfig::new(100_000, 62, init).with_step(StepSchedule::harmonic(2.0))).unwrap();
    assert!(t.final_strategy.at(0).probs()[0] >= 0.95);
    assert!(t.final_strategy.at(1).probs()[0] <= 0.05);
    certify(&m, &t.final_strategy, Budget::Cycles(2_000_000));
}

#[test]
fn stable_mm1_hits_boundary_equilibrium() {
    let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
    let t = run_unobservable(&m, &RunConfig::new(20_000, 63, SimplexPoint::uniform(2).unwrap())).unwrap();
    assert_eq!(t.final_strategy.at(0).probs(), &[1.0, 0.0]);
    certify(&m, &t.final_strategy, Budget::Cycles(1_000_000));
}
