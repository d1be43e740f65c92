//! The projected Robbins-Monro iteration over strategies.
//!
//! Iteration `n` simulates one regeneration cycle under `p(n)` with its own
//! random substream, forms the cycle sum `G`, and sets
//! `p(n+1) = proj_simplex(p(n) + gamma_n G)` with `gamma_n = gamma0 / n`.
//! Observable games update each signal's mixed action with that signal's
//! column of `G`; signals not seen in a cycle receive a zero update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{control_sum, per_signal_g, raw_g, ControlVariateState};
use crate::models::{CycleRecord, GameModel};
use crate::rng::{substream, Domain};
use crate::simplex::project_simplex;
use crate::strategy::BehavioralStrategy;

/// Harmonic step sizes `gamma_n = gamma0 / n`, optionally divided by the
/// model's cycle-length approximation at the current strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSchedule {
    pub gamma0: f64,
    #[serde(default)]
    pub dynamic_divisor: bool,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { gamma0: 1.0, dynamic_divisor: false }
    }
}

impl StepSchedule {
    pub fn harmonic(gamma0: f64) -> Self {
        StepSchedule { gamma0, dynamic_divisor: false }
    }

    /// Step at iteration `n >= 1` given the divisor in effect.
    pub fn step(&self, n: u64, divisor: f64) -> f64 {
        (self.gamma0 / divisor) / n as f64
    }
}

/// Per-iteration cap on the arrivals of a simulated cycle.
///
/// Capping is a heuristic for games where some strategies make the queue
/// unstable: with `beta_n = ceil(kappa n)` the early, possibly unstable
/// iterates cannot stall the run, while the cap stops binding once the
/// iterates settle in the stable region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationSchedule {
    #[default]
    None,
    Linear { kappa: f64 },
}

impl TruncationSchedule {
    pub fn cap(&self, n: u64) -> Option<usize> {
        match *self {
            TruncationSchedule::None => None,
            TruncationSchedule::Linear { kappa } => Some((kappa * n as f64).ceil() as usize),
        }
    }

    fn validate(&self) -> Result<()> {
        if let TruncationSchedule::Linear { kappa } = *self {
            if !(kappa.is_finite() && kappa >= 1.0) {
                return Err(Error::config("truncation.kappa", format!("must be >= 1, got {kappa}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub iterations: u64,
    pub seed: u64,
    pub initial: BehavioralStrategy,
    pub step: StepSchedule,
    pub truncation: TruncationSchedule,
    pub control_variates: bool,
    /// Record every `log_stride`-th iterate; `None` picks `max(1, N / 10^4)`.
    pub log_stride: Option<u64>,
    /// Cycles averaged per update.
    pub batch_cycles: u32,
}

impl RunConfig {
    pub fn new(iterations: u64, seed: u64, initial: impl Into<BehavioralStrategy>) -> Self {
        RunConfig {
            iterations,
            seed,
            initial: initial.into(),
            step: StepSchedule::default(),
            truncation: TruncationSchedule::None,
            control_variates: false,
            log_stride: None,
            batch_cycles: 1,
        }
    }

    pub fn with_step(mut self, step: StepSchedule) -> Self {
        self.step = step;
        self
    }

    pub fn with_truncation(mut self, truncation: TruncationSchedule) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_control_variates(mut self, on: bool) -> Self {
        self.control_variates = on;
        self
    }

    pub fn with_log_stride(mut self, stride: u64) -> Self {
        self.log_stride = Some(stride);
        self
    }

    pub fn effective_log_stride(&self) -> u64 {
        self.log_stride.unwrap_or((self.iterations / 10_000).max(1)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("run.iterations", "must be >= 1"));
        }
        if !(self.step.gamma0.is_finite() && self.step.gamma0 > 0.0) {
            return Err(Error::config("run.step.gamma0", format!("must be > 0, got {}", self.step.gamma0)));
        }
        if self.batch_cycles == 0 {
            return Err(Error::config("run.batch_cycles", "must be >= 1"));
        }
        if self.log_stride == Some(0) {
            return Err(Error::config("run.log_stride", "must be >= 1"));
        }
        self.truncation.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedPoint {
    pub iteration: u64,
    pub strategy: BehavioralStrategy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub iterations: u64,
    pub arrivals: u64,
    pub cycles: u64,
    pub cap_hits: u64,
    pub last_cap_hit: Option<u64>,
    /// Seconds; always 0 on targets without a clock.
    pub wall_clock_secs: f64,
}

/// Logged iterates of a run. Iteration 0 holds the initial strategy and
/// iteration `n` the strategy after `n` updates; the final strategy is
/// always logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<LoggedPoint>,
    pub final_strategy: BehavioralStrategy,
    pub totals: RunTotals,
}

/// Step divisor `l~(p)` supplied by the model; 1 for models without one.
pub fn dynamic_divisor(model: &dyn GameModel, strategy: &BehavioralStrategy) -> Result<f64> {
    let l = model.cycle_length_approx(strategy)?;
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::config(
            "run.step.dynamic_divisor",
            format!("cycle-length approximation {l} is not positive at {strategy}"),
        ));
    }
    Ok(l)
}

/// Runs the iteration on a game with a single signal.
pub fn run_unobservable(model: &dyn GameModel, config: &RunConfig) -> Result<Trajectory> {
    if model.signal_count() != 1 {
        return Err(Error::InvalidInput(format!(
            "model {} has {} signals; use run_observable",
            model.name(),
            model.signal_count()
        )));
    }
    run(model, config, false, |_, _| {})
}

/// Runs the per-signal iteration on a game with any number of signals.
pub fn run_observable(model: &dyn GameModel, config: &RunConfig) -> Result<Trajectory> {
    if config.control_variates && model.signal_count() > 1 {
        return Err(Error::config(
            "run.control_variates",
            "control variates are only supported for games with a single signal",
        ));
    }
    run(model, config, true, |_, _| {})
}

/// As [`run_unobservable`] or [`run_observable`] (picked by signal count),
/// calling `on_log` with every logged point as it is produced.
pub fn run_with_observer(
    model: &dyn GameModel,
    config: &RunConfig,
    on_log: impl FnMut(u64, &BehavioralStrategy),
) -> Result<Trajectory> {
    let per_signal = model.signal_count() > 1;
    if per_signal && config.control_variates {
        return Err(Error::config(
            "run.control_variates",
            "control variates are only supported for games with a single signal",
        ));
    }
    run(model, config, per_signal, on_log)
}

struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Clock {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

fn run(
    model: &dyn GameModel,
    config: &RunConfig,
    per_signal: bool,
    mut on_log: impl FnMut(u64, &BehavioralStrategy),
) -> Result<Trajectory> {
    config.validate()?;
    let k = model.action_count();
    let signals = model.signal_count();
    config.initial.check_shape(k, signals)?;
    let mut cv = if config.control_variates {
        if model.control_dim() == 0 {
            return Err(Error::config(
                "run.control_variates",
                format!("model {} provides no control variates", model.name()),
            ));
        }
        Some(ControlVariateState::new(k, model.control_dim()))
    } else {
        None
    };

    let clock = Clock::start();
    let stride = config.effective_log_stride();
    let batch = config.batch_cycles as u64;
    let mut strategy = config.initial.clone();
    let mut totals = RunTotals::default();
    let mut points = vec![LoggedPoint { iteration: 0, strategy: strategy.clone() }];
    on_log(0, &strategy);

    let mut record = CycleRecord::new(k, model.control_dim());
    let mut direction = vec![vec![0.0; k]; signals];
    let mut moved = vec![0.0; k];

    for n in 1..=config.iterations {
        let cap = config.truncation.cap(n);
        for col in direction.iter_mut() {
            col.fill(0.0);
        }
        for b in 0..batch {
            let mut rng = substream(config.seed, Domain::Iteration, (n - 1) * batch + b);
            model.simulate_cycle_into(&strategy, cap, &mut rng, &mut record)?;
            totals.cycles += 1;
            totals.arrivals += record.cycle_length() as u64;
            if record.truncated() {
                totals.cap_hits += 1;
                totals.last_cap_hit = Some(n);
            }
            if per_signal {
                for (acc, g) in direction.iter_mut().zip(per_signal_g(&record, signals)?) {
                    add_into(acc, &g);
                }
            } else {
                let g = raw_g(&record);
                let g = match cv.as_mut() {
                    Some(state) => {
                        let c = control_sum(&record);
                        let adjusted = state.adjust(&g, &c);
                        state.observe(&g, &c);
                        adjusted
                    }
                    None => g,
                };
                add_into(&mut direction[0], &g);
            }
        }
        if batch > 1 {
            for col in direction.iter_mut() {
                for v in col.iter_mut() {
                    *v /= batch as f64;
                }
            }
        }

        let divisor = if config.step.dynamic_divisor {
            dynamic_divisor(model, &strategy)?
        } else {
            1.0
        };
        let step = config.step.step(n, divisor);
        for (s, g) in direction.iter().enumerate() {
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            for ((m, p), d) in moved.iter_mut().zip(strategy.at(s).probs()).zip(g) {
                *m = p + step * d;
            }
            let next = project_simplex(&moved).map_err(|e| {
                Error::Instability(format!("iteration {n}: update left the finite range ({e})"))
            })?;
            strategy.set(s, next);
        }

        if n % stride == 0 || n == config.iterations {
            on_log(n, &strategy);
            points.push(LoggedPoint { iteration: n, strategy: strategy.clone() });
        }
    }

    totals.iterations = config.iterations;
    totals.wall_clock_secs = clock.elapsed_secs();
    Ok(Trajectory { points, final_strategy: strategy, totals })
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, v) in acc.iter_mut().zip(g) {
        *a += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::models::{ObservableGG1Model, ParallelQueuesModel, SensingModel};
    use crate::rng::SimRng;
    use crate::simplex::SimplexPoint;

    fn p(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn truncation_caps() {
        let t = TruncationSchedule::Linear { kappa: 1.5 };
        assert_eq!(t.cap(1), Some(2));
        assert_eq!(t.cap(2), Some(3));
        assert_eq!(TruncationSchedule::None.cap(5), None);
        assert!(RunConfig::new(10, 0, p(&[0.5, 0.5]))
            .with_truncation(TruncationSchedule::Linear { kappa: 0.5 })
            .validate()
            .is_err());
    }

    #[test]
    fn default_log_stride() {
        assert_eq!(RunConfig::new(1_000_000, 0, p(&[0.5, 0.5])).effective_log_stride(), 100);
        assert_eq!(RunConfig::new(50, 0, p(&[0.5, 0.5])).effective_log_stride(), 1);
    }

    #[test]
    fn short_run_is_deterministic_and_feasible() {
        let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
        let cfg = RunConfig::new(2_000, 9, p(&[0.5, 0.5])).with_log_stride(7);
        let a = run_unobservable(&m, &cfg).unwrap();
        let b = run_unobservable(&m, &cfg).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.final_strategy, b.final_strategy);
        assert_eq!(a.points.last().unwrap().iteration, 2_000);
        for pt in &a.points {
            let v = pt.strategy.at(0).probs();
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        assert_eq!(a.totals.cycles, 2_000);
        assert!(a.totals.arrivals >= 2_000);
    }

    #[test]
    fn observable_requires_per_signal_runner() {
        let m = ObservableGG1Model::new(
            &DistributionSpec::Exponential { rate: 1.0 },
            &DistributionSpec::Exponential { rate: 1.0 },
            1.7,
            1.0,
        )
        .unwrap();
        let init = BehavioralStrategy::constant(p(&[0.5, 0.5]), 2).unwrap();
        assert!(run_unobservable(&m, &RunConfig::new(10, 0, init.clone())).is_err());
        assert!(run_observable(&m, &RunConfig::new(10, 0, init)).is_ok());
    }

    /// Delegates to an inner model but reports a constant step divisor.
    struct ConstantDivisor<M> {
        inner: M,
        divisor: f64,
    }

    impl<M: GameModel> GameModel for ConstantDivisor<M> {
        fn name(&self) -> &str {
            "constant_divisor"
        }
        fn action_count(&self) -> usize {
            self.inner.action_count()
        }
        fn simulate_cycle_into(
            &self,
            strategy: &BehavioralStrategy,
            cap: Option<usize>,
            rng: &mut SimRng,
            out: &mut CycleRecord,
        ) -> Result<()> {
            self.inner.simulate_cycle_into(strategy, cap, rng, out)
        }
        fn cycle_length_approx(&self, _: &BehavioralStrategy) -> Result<f64> {
            Ok(self.divisor)
        }
    }

    #[test]
    fn constant_divisor_matches_rescaled_gamma() {
        for d in [2.0, 4.0, 0.5] {
            let m = ConstantDivisor { inner: ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap(), divisor: d };
            let dynamic = RunConfig::new(3_000, 1, p(&[0.5, 0.5]))
                .with_step(StepSchedule { gamma0: 1.0, dynamic_divisor: true })
                .with_log_stride(1);
            let rescaled = dynamic.clone().with_step(StepSchedule::harmonic(1.0 / d));
            let a = run_unobservable(&m, &dynamic).unwrap();
            let b = run_unobservable(&m, &rescaled).unwrap();
            assert_eq!(a.points, b.points, "divisor {d}");
        }
    }

    #[test]
    fn dynamic_divisor_default_and_sensing() {
        let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
        assert_eq!(dynamic_divisor(&m, &p(&[0.3, 0.7]).into()).unwrap(), 1.0);
        let s = SensingModel::new(0.5, &DistributionSpec::Exponential { rate: 1.0 }, 5.0, 1.0).unwrap();
        assert!((dynamic_divisor(&s, &p(&[0.0, 1.0]).into()).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_signal_paths_agree() {
        let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
        let cfg = RunConfig::new(1_500, 3, p(&[0.2, 0.8])).with_log_stride(1);
        assert_eq!(
            run_unobservable(&m, &cfg).unwrap().points,
            run_observable(&m, &cfg).unwrap().points
        );
    }

    #[test]
    fn control_variates_need_controls() {
        let m = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
        let cfg = RunConfig::new(10, 0, p(&[0.5, 0.5])).with_control_variates(true);
        assert!(matches!(run_unobservable(&m, &cfg), Err(Error::Config { .. })));
        let s = SensingModel::new(0.9, &DistributionSpec::Exponential { rate: 1.0 }, 5.0, 1.0).unwrap();
        assert!(run_unobservable(&s, &cfg).is_ok());
    }

    #[test]
    fn unstable_without_truncation_propagates() {
        let m = ParallelQueuesModel::mm1(2.0, 1.0, 5.0, 1.0).unwrap().with_safety_limit(1_000);
        let cfg = RunConfig::new(200, 0, p(&[1.0, 0.0]));
        assert!(matches!(run_unobservable(&m, &cfg), Err(Error::Instability(_))));
        let capped = cfg.with_truncation(TruncationSchedule::Linear { kappa: 1.0 });
        let t = run_unobservable(&m, &capped).unwrap();
        assert!(t.totals.cap_hits >= 1);
    }
}
