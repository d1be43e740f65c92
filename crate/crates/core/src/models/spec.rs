use serde::{Deserialize, Serialize};

use super::{GameModel, ObservableGG1Model, ParallelQueuesModel, SensingModel, StationSpec};
use crate::distributions::DistributionSpec;
use crate::error::Result;

/// Serializable description of a built-in model.
///
/// ```toml
/// [model]
/// kind = "mg1"
/// inter_arrival = { kind = "exponential", rate = 0.5 }
/// service = { kind = "exponential", rate = 1.0 }
/// reward = 5.0
/// cost = 1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Unobservable single queue: join or balk.
    Mg1 {
        inter_arrival: DistributionSpec,
        service: DistributionSpec,
        reward: f64,
        cost: f64,
    },
    /// Unobservable parallel queues; the last action is balking.
    ParallelQueues {
        inter_arrival: DistributionSpec,
        stations: Vec<StationSpec>,
    },
    /// Sense-or-queue routing between a bufferless and a queued server.
    Sensing {
        lambda: f64,
        service: DistributionSpec,
        sensing_cost: f64,
        waiting_cost: f64,
    },
    /// Observable queue with queue-length signals.
    ObservableGg1 {
        inter_arrival: DistributionSpec,
        service: DistributionSpec,
        reward: f64,
        cost: f64,
    },
}

impl ModelSpec {
    pub fn build(&self, safety_limit: Option<usize>) -> Result<Box<dyn GameModel>> {
        let model: Box<dyn GameModel> = match self {
            ModelSpec::Mg1 { inter_arrival, service, reward, cost } => {
                let m = ParallelQueuesModel::single_queue(inter_arrival, service, *reward, *cost)?;
                Box::new(match safety_limit {
                    Some(l) => m.with_safety_limit(l),
                    None => m,
                })
            }
            ModelSpec::ParallelQueues { inter_arrival, stations } => {
                let m = ParallelQueuesModel::new(inter_arrival, stations)?;
                Box::new(match safety_limit {
                    Some(l) => m.with_safety_limit(l),
                    None => m,
                })
            }
            ModelSpec::Sensing { lambda, service, sensing_cost, waiting_cost } => {
                let m = SensingModel::new(*lambda, service, *sensing_cost, *waiting_cost)?;
                Box::new(match safety_limit {
                    Some(l) => m.with_safety_limit(l),
                    None => m,
                })
            }
            ModelSpec::ObservableGg1 { inter_arrival, service, reward, cost } => {
                let m = ObservableGG1Model::new(inter_arrival, service, *reward, *cost)?;
                Box::new(match safety_limit {
                    Some(l) => m.with_safety_limit(l),
                    None => m,
                })
            }
        };
        Ok(model)
    }

    /// Whether every strategy yields a positive-recurrent system. When this
    /// is false, runs need a truncation schedule.
    pub fn stable_for_all_strategies(&self) -> Result<bool> {
        Ok(match self {
            ModelSpec::Mg1 { inter_arrival, service, reward, cost } => {
                ParallelQueuesModel::single_queue(inter_arrival, service, *reward, *cost)?
                    .is_stable_for_all_strategies()
            }
            ModelSpec::ParallelQueues { inter_arrival, stations } => {
                ParallelQueuesModel::new(inter_arrival, stations)?.is_stable_for_all_strategies()
            }
            ModelSpec::Sensing { lambda, service, sensing_cost, waiting_cost } => {
                SensingModel::new(*lambda, service, *sensing_cost, *waiting_cost)?.is_stable()
            }
            // At most K + 1 customers are ever present.
            ModelSpec::ObservableGg1 { .. } => true,
        })
    }
}
