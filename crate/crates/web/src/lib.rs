//! Browser bindings. Trajectories come back as flat `Float64Array`s so the
//! page can plot them without a serialization layer.

use qgame::distributions::DistributionSpec;
use qgame::models::{GameModel, ModelSpec, ObservableGG1Model, ParallelQueuesModel, StationSpec};
use qgame::sa_engine::{run_with_observer, RunConfig, StepSchedule, TruncationSchedule};
use qgame::verify::mm1_oracles;
use qgame::{BehavioralStrategy, SimplexPoint};
use wasm_bindgen::prelude::*;

/// Keeps a single call from freezing the tab.
pub const MAX_ITERATIONS: u64 = 2_000_000;

/// Points per returned trajectory, roughly.
const PLOT_POINTS: u64 = 1_000;

fn run_flat(model: &dyn GameModel, iterations: u64, seed: u64, gamma0: f64, truncate: bool) -> qgame::Result<Vec<f64>> {
    if iterations > MAX_ITERATIONS {
        return Err(qgame::Error::config("iterations", format!("at most {MAX_ITERATIONS} in the browser")));
    }
    let init = BehavioralStrategy::constant(SimplexPoint::uniform(model.action_count())?, model.signal_count())?;
    let mut cfg = RunConfig::new(iterations, seed, init)
        .with_step(StepSchedule::harmonic(gamma0))
        .with_log_stride((iterations / PLOT_POINTS).max(1));
    if truncate {
        cfg = cfg.with_truncation(TruncationSchedule::Linear { kappa: 1.0 });
    }
    let t = run_with_observer(model, &cfg, |_, _| {})?;
    let mut out = Vec::with_capacity(t.points.len() * (1 + model.signal_count() * model.action_count()));
    for pt in &t.points {
        out.push(pt.iteration as f64);
        out.extend(pt.strategy.flatten());
    }
    Ok(out)
}

/// Rows of `[iteration, p_join, p_balk]` for the unobservable M/M/1 game.
/// Runs with `lambda >= mu` are truncated at `n` arrivals per iteration.
pub fn mm1_rows(lambda: f64, mu: f64, reward: f64, cost: f64, iterations: u64, seed: u64) -> qgame::Result<Vec<f64>> {
    let m = ParallelQueuesModel::mm1(lambda, mu, reward, cost)?;
    run_flat(&m, iterations, seed, 1.0, lambda >= mu)
}

/// Equilibrium joining probability, or NaN when it is undefined.
pub fn mm1_equilibrium(lambda: f64, mu: f64, reward: f64, cost: f64) -> f64 {
    mm1_oracles(Some(lambda), mu, reward, cost).ok().and_then(|o| o.p_e).unwrap_or(f64::NAN)
}

/// The two-queue example: rows of `[iteration, p_1, p_2, p_balk]`.
pub fn two_queue_rows(iterations: u64, seed: u64, gamma0: f64) -> qgame::Result<Vec<f64>> {
    let spec = ModelSpec::ParallelQueues {
        inter_arrival: DistributionSpec::Gamma { shape: 0.1, scale: 11.0 },
        stations: vec![
            StationSpec {
                service: DistributionSpec::BetaShiftScale { alpha: 10.0, beta: 10.0, shift: 0.5, scale: 1.0 },
                reward: 5.0,
                cost: 1.0,
            },
            StationSpec {
                service: DistributionSpec::ScaledBernoulli { success_prob: 0.1, value: 10.0 },
                reward: 5.0,
                cost: 1.0,
            },
        ],
    };
    run_flat(spec.build(None)?.as_ref(), iterations, seed, gamma0, false)
}

/// Observable queue with Exp(1) arrivals. Returns `[signals, rows...]` where
/// each row is `iteration` followed by `(join, balk)` per queue length.
pub fn observable_rows(uniform_service: bool, reward: f64, cost: f64, iterations: u64, seed: u64) -> qgame::Result<Vec<f64>> {
    let service = if uniform_service {
        DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }
    } else {
        DistributionSpec::Exponential { rate: 1.0 }
    };
    let m = ObservableGG1Model::new(&DistributionSpec::Exponential { rate: 1.0 }, &service, reward, cost)?;
    let mut out = vec![m.signal_count() as f64];
    out.extend(run_flat(&m, iterations, seed, 2.0, false)?);
    Ok(out)
}

fn js(e: qgame::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = mm1Trajectory)]
pub fn mm1_trajectory(lambda: f64, mu: f64, reward: f64, cost: f64, iterations: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    mm1_rows(lambda, mu, reward, cost, iterations.into(), seed.into()).map_err(js)
}

#[wasm_bindgen(js_name = mm1Equilibrium)]
pub fn mm1_equilibrium_js(lambda: f64, mu: f64, reward: f64, cost: f64) -> f64 {
    mm1_equilibrium(lambda, mu, reward, cost)
}

#[wasm_bindgen(js_name = twoQueueTrajectory)]
pub fn two_queue_trajectory(iterations: u32, seed: u32, gamma0: f64) -> Result<Vec<f64>, JsError> {
    two_queue_rows(iterations.into(), seed.into(), gamma0).map_err(js)
}

#[wasm_bindgen(js_name = observableTrajectory)]
pub fn observable_trajectory(uniform_service: bool, reward: f64, cost: f64, iterations: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    observable_rows(uniform_service, reward, cost, iterations.into(), seed.into()).map_err(js)
}
