//! The TOML experiment description.
//!
//! ```toml
//! [model]
//! kind = "mg1"
//! inter_arrival = { kind = "exponential", rate = 2.0 }
//! service = { kind = "exponential", rate = 1.0 }
//! reward = 5.0
//! cost = 1.0
//!
//! [run]
//! iterations = 1000000
//! seed = 1
//! initial = [0.5, 0.5]
//! truncation = { kind = "linear", kappa = 1.0 }
//! ```
//!
//! Physical parameters have no defaults. Algorithmic knobs do, and the
//! resolved values are echoed into every summary.

use std::path::{Path, PathBuf};

use qgame::distributions::DistributionSpec;
use qgame::models::{GameModel, ModelSpec, DEFAULT_SAFETY_LIMIT};
use qgame::sa_engine::{RunConfig, StepSchedule, TruncationSchedule};
use qgame::verify::{Budget, VerifyConfig, DEFAULT_ALPHA, DEFAULT_BATCHES};
use qgame::{BehavioralStrategy, SimplexPoint};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub run: RunSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Initial strategy: one mixed action for every signal, or one per signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStrategy {
    Shared(Vec<f64>),
    PerSignal(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: u64,
    #[serde(default)]
    pub seed: u64,
    /// Uniform over actions when absent.
    #[serde(default)]
    pub initial: Option<InitialStrategy>,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    #[serde(default)]
    pub dynamic_step: bool,
    #[serde(default)]
    pub truncation: TruncationSchedule,
    #[serde(default)]
    pub control_variates: bool,
    /// `max(1, iterations / 10^4)` when absent.
    #[serde(default)]
    pub log_stride: Option<u64>,
    #[serde(default = "default_batch_cycles")]
    pub batch_cycles: u32,
    #[serde(default = "default_safety_limit")]
    pub safety_limit: usize,
}

fn default_gamma0() -> f64 {
    1.0
}

fn default_batch_cycles() -> u32 {
    1
}

fn default_safety_limit() -> usize {
    DEFAULT_SAFETY_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Cycle budget; mutually exclusive with `arrivals`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<u64>,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_target")]
    pub target_eps: f64,
    /// Defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            cycles: None,
            arrivals: None,
            batches: DEFAULT_BATCHES,
            alpha: DEFAULT_ALPHA,
            target_eps: default_target(),
            seed: None,
        }
    }
}

const DEFAULT_VERIFY_CYCLES: u64 = 100_000;

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_target() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

/// Grid of runs: every seed crossed with every `gamma0`. An absent list
/// means the single value from `[run]`; an empty list means no runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<Vec<f64>>,
    /// Verify every final strategy with the `[verify]` settings.
    #[serde(default)]
    pub certify: bool,
}

pub const MAX_SWEEP_RUNS: usize = 10_000;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Fills in defaults and checks everything that can be checked before
    /// simulating.
    fn resolve(&mut self) -> Result<(), CliError> {
        self.check_distributions()?;
        let model = self.build_model()?;
        if self.run.initial.is_none() {
            let k = model.action_count();
            self.run.initial = Some(InitialStrategy::Shared(vec![1.0 / k as f64; k]));
        }
        self.run.log_stride = Some(self.run_config_for(model.as_ref())?.effective_log_stride());
        if self.run.safety_limit == 0 {
            return Err(CliError::config_field("run.safety_limit", "must be >= 1"));
        }
        if self.verify.cycles.is_some() && self.verify.arrivals.is_some() {
            return Err(CliError::config_field("verify", "set either cycles or arrivals, not both"));
        }
        if self.verify.cycles.is_none() && self.verify.arrivals.is_none() {
            self.verify.cycles = Some(DEFAULT_VERIFY_CYCLES);
        }
        if !(self.verify.target_eps.is_finite() && self.verify.target_eps >= 0.0) {
            return Err(CliError::config_field("verify.target_eps", "must be finite and >= 0"));
        }
        self.verify_config(0)?.validate()?;
        if let Some(sweep) = &self.sweep {
            let runs = sweep.seeds.as_ref().map_or(1, Vec::len) * sweep.gamma0.as_ref().map_or(1, Vec::len);
            if runs > MAX_SWEEP_RUNS {
                return Err(CliError::config_field(
                    "sweep",
                    format!("{runs} runs exceed the limit of {MAX_SWEEP_RUNS}"),
                ));
            }
            for &g in sweep.gamma0.iter().flatten() {
                if !(g.is_finite() && g > 0.0) {
                    return Err(CliError::config_field("sweep.gamma0", format!("must be > 0, got {g}")));
                }
            }
        }
        Ok(())
    }

    /// Checks every distribution under its config path, so errors name the
    /// offending field.
    fn check_distributions(&self) -> Result<(), CliError> {
        let mut named: Vec<(String, &DistributionSpec)> = Vec::new();
        match &self.model {
            ModelSpec::Mg1 { inter_arrival, service, .. } | ModelSpec::ObservableGg1 { inter_arrival, service, .. } => {
                named.push(("model.inter_arrival".into(), inter_arrival));
                named.push(("model.service".into(), service));
            }
            ModelSpec::ParallelQueues { inter_arrival, stations } => {
                named.push(("model.inter_arrival".into(), inter_arrival));
                for (i, st) in stations.iter().enumerate() {
                    named.push((format!("model.stations[{i}].service"), &st.service));
                }
            }
            ModelSpec::Sensing { service, .. } => named.push(("model.service".into(), service)),
        }
        for (name, d) in named {
            d.validate().map_err(|e| match e {
                qgame::Error::Config { field, reason } => CliError::config_field(&format!("{name}.{field}"), reason),
                other => CliError::config_field(&name, other),
            })?;
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Box<dyn GameModel>, CliError> {
        Ok(self.model.build(Some(self.run.safety_limit))?)
    }

    pub fn initial_strategy(&self, model: &dyn GameModel) -> Result<BehavioralStrategy, CliError> {
        let field = |e: qgame::Error| CliError::config_field("run.initial", e.to_string());
        let signals = model.signal_count();
        let strategy = match &self.run.initial {
            None => BehavioralStrategy::constant(SimplexPoint::uniform(model.action_count()).map_err(field)?, signals),
            Some(InitialStrategy::Shared(v)) => {
                BehavioralStrategy::constant(SimplexPoint::new(v.clone()).map_err(field)?, signals)
            }
            Some(InitialStrategy::PerSignal(rows)) => BehavioralStrategy::new(
                rows.iter().map(|r| SimplexPoint::new(r.clone())).collect::<Result<_, _>>().map_err(field)?,
            ),
        }
        .map_err(field)?;
        strategy.check_shape(model.action_count(), signals).map_err(field)?;
        Ok(strategy)
    }

    /// Run configuration with the initial strategy expanded to the model's
    /// signal count.
    pub fn run_config_for(&self, model: &dyn GameModel) -> Result<RunConfig, CliError> {
        let cfg = RunConfig {
            iterations: self.run.iterations,
            seed: self.run.seed,
            initial: self.initial_strategy(model)?,
            step: StepSchedule { gamma0: self.run.gamma0, dynamic_divisor: self.run.dynamic_step },
            truncation: self.run.truncation,
            control_variates: self.run.control_variates,
            log_stride: self.run.log_stride,
            batch_cycles: self.run.batch_cycles,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn verify_config(&self, seed_fallback: u64) -> Result<VerifyConfig, CliError> {
        let budget = match (self.verify.cycles, self.verify.arrivals) {
            (_, Some(a)) => Budget::Arrivals(a),
            (Some(c), None) => Budget::Cycles(c),
            (None, None) => Budget::Cycles(DEFAULT_VERIFY_CYCLES),
        };
        Ok(VerifyConfig {
            budget,
            batches: self.verify.batches,
            alpha: self.verify.alpha,
            seed: self.verify.seed.unwrap_or(seed_fallback),
        })
    }

    pub fn prefix(&self) -> &str {
        self.output.prefix.as_deref().unwrap_or("run")
    }

    /// The sweep grid in row order: seeds outer, gamma0 inner.
    pub fn sweep_grid(&self) -> Vec<(u64, f64)> {
        let Some(sweep) = &self.sweep else {
            return vec![(self.run.seed, self.run.gamma0)];
        };
        let seeds = sweep.seeds.clone().unwrap_or_else(|| vec![self.run.seed]);
        let gammas = sweep.gamma0.clone().unwrap_or_else(|| vec![self.run.gamma0]);
        seeds.iter().flat_map(|&s| gammas.iter().map(move |&g| (s, g))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MM1: &str = r#"
[model]
kind = "mg1"
inter_arrival = { kind = "exponential", rate = 0.5 }
service = { kind = "exponential", rate = 1.0 }
reward = 5.0
cost = 1.0

[run]
iterations = 1000
"#;

    #[test]
    fn fills_defaults() {
        let cfg = ExperimentConfig::parse(MM1).unwrap();
        assert_eq!(cfg.run.initial, Some(InitialStrategy::Shared(vec![0.5, 0.5])));
        assert_eq!(cfg.run.log_stride, Some(1));
        assert_eq!(cfg.run.gamma0, 1.0);
        assert_eq!(cfg.verify.cycles, Some(DEFAULT_VERIFY_CYCLES));
        assert_eq!(cfg.prefix(), "run");
        assert_eq!(cfg.sweep_grid(), vec![(0, 1.0)]);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::parse(MM1).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn physical_parameters_are_required() {
        let missing = MM1.replace("reward = 5.0\n", "");
        assert!(matches!(ExperimentConfig::parse(&missing), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_bad_fields() {
        let bad = MM1.replace("iterations = 1000", "iterations = 1000\ninitial = [0.5, 0.3]");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("run.initial"), "{err}");
        let unknown = MM1.replace("iterations = 1000", "iterations = 1000\ngama0 = 2.0");
        assert!(ExperimentConfig::parse(&unknown).unwrap_err().to_string().contains("gama0"));
        let rate = MM1.replace("rate = 0.5", "rate = -0.5");
        assert!(ExperimentConfig::parse(&rate).unwrap_err().to_string().contains("inter_arrival"));
    }

    #[test]
    fn sweep_grid_order() {
        let text = format!("{MM1}\n[sweep]\nseeds = [3, 1]\ngamma0 = [0.1, 0.2]\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.sweep_grid(), vec![(3, 0.1), (3, 0.2), (1, 0.1), (1, 0.2)]);
        let empty = ExperimentConfig::parse(&format!("{MM1}\n[sweep]\nseeds = []\n")).unwrap();
        assert!(empty.sweep_grid().is_empty());
    }
}
