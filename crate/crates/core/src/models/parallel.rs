use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{advance_workloads, after_arrival, check_cycle_args, CycleRecord, GameModel, Step, DEFAULT_SAFETY_LIMIT};
use crate::distributions::{DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::strategy::BehavioralStrategy;

/// One station of the parallel-queues game with a linear net value
/// `reward - cost * (waiting + service)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub service: DistributionSpec,
    pub reward: f64,
    pub cost: f64,
}

/// Conditional expected value of joining a station, as a function of the
/// workload found there.
#[derive(Clone)]
pub enum StationUtility {
    /// `reward - cost * (workload + mean service)`.
    Linear { reward: f64, cost: f64 },
    /// Caller-supplied `workload -> E[value | workload]`; the expectation over
    /// the customer's own service time is the caller's job.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for StationUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StationUtility::Linear { reward, cost } => {
                write!(f, "Linear {{ reward: {reward}, cost: {cost} }}")
            }
            StationUtility::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
struct Station {
    service: Sampler,
    mean_service: f64,
    utility: StationUtility,
}

impl Station {
    fn vbar(&self, workload: f64) -> f64 {
        match &self.utility {
            StationUtility::Linear { reward, cost } => reward - cost * (workload + self.mean_service),
            StationUtility::Custom(f) => f(workload),
        }
    }
}

/// `k - 1` parallel single-server FCFS queues plus a balking action (the
/// last one, worth 0). Arrivals form a renewal process.
///
/// Per arrival the random draws are, in order: one uniform for the action,
/// the service time if a station is joined, then the next inter-arrival time.
#[derive(Debug, Clone)]
pub struct ParallelQueuesModel {
    name: String,
    inter_arrival: Sampler,
    arrival_rate: f64,
    stations: Vec<Station>,
    safety_limit: usize,
}

impl ParallelQueuesModel {
    pub fn new(inter_arrival: &DistributionSpec, stations: &[StationSpec]) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::config("stations", "need at least one station"));
        }
        let ia = inter_arrival.sampler()?;
        if ia.mean() <= 0.0 {
            return Err(Error::config("inter_arrival", "mean inter-arrival time must be > 0"));
        }
        let mut built = Vec::with_capacity(stations.len());
        for (m, s) in stations.iter().enumerate() {
            let service = s
                .service
                .sampler()
                .map_err(|e| Error::config(format!("stations[{m}].service"), e.to_string()))?;
            for (field, v) in [("reward", s.reward), ("cost", s.cost)] {
                if !v.is_finite() {
                    return Err(Error::config(format!("stations[{m}].{field}"), "must be finite"));
                }
            }
            if s.cost < 0.0 {
                return Err(Error::config(format!("stations[{m}].cost"), "must be >= 0"));
            }
            built.push(Station {
                mean_service: service.mean(),
                service,
                utility: StationUtility::Linear { reward: s.reward, cost: s.cost },
            });
        }
        Ok(ParallelQueuesModel {
            name: if stations.len() == 1 { "mg1".into() } else { "parallel_queues".into() },
            arrival_rate: 1.0 / ia.mean(),
            inter_arrival: ia,
            stations: built,
            safety_limit: DEFAULT_SAFETY_LIMIT,
        })
    }

    /// The unobservable single queue: join (action 0) or balk (action 1).
    pub fn single_queue(
        inter_arrival: &DistributionSpec,
        service: &DistributionSpec,
        reward: f64,
        cost: f64,
    ) -> Result<Self> {
        Self::new(
            inter_arrival,
            &[StationSpec { service: service.clone(), reward, cost }],
        )
    }

    /// Unobservable M/M/1 with arrival rate `lambda` and service rate `mu`.
    pub fn mm1(lambda: f64, mu: f64, reward: f64, cost: f64) -> Result<Self> {
        Self::single_queue(
            &DistributionSpec::Exponential { rate: lambda },
            &DistributionSpec::Exponential { rate: mu },
            reward,
            cost,
        )
    }

    /// Replaces the utility of station `m`.
    pub fn with_utility(mut self, m: usize, utility: StationUtility) -> Result<Self> {
        let st = self
            .stations
            .get_mut(m)
            .ok_or_else(|| Error::InvalidInput(format!("no station {m}")))?;
        st.utility = utility;
        Ok(self)
    }

    pub fn with_safety_limit(mut self, limit: usize) -> Self {
        self.safety_limit = limit.max(1);
        self
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn service_rates(&self) -> Vec<f64> {
        self.stations.iter().map(|s| 1.0 / s.mean_service).collect()
    }

    /// True when every strategy yields a stable system (`lambda < mu_m` for all `m`).
    pub fn is_stable_for_all_strategies(&self) -> bool {
        self.stations
            .iter()
            .all(|s| self.arrival_rate * s.mean_service < 1.0)
    }
}

impl GameModel for ParallelQueuesModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn action_count(&self) -> usize {
        self.stations.len() + 1
    }

    fn safety_limit(&self) -> usize {
        self.safety_limit
    }

    fn simulate_cycle_into(
        &self,
        strategy: &BehavioralStrategy,
        cap: Option<usize>,
        rng: &mut SimRng,
        out: &mut CycleRecord,
    ) -> Result<()> {
        check_cycle_args(self, strategy, cap)?;
        let k = self.action_count();
        out.reset(k, 0);
        let p = strategy.at(0);
        let mut workloads = vec![0.0; self.stations.len()];
        let mut row = vec![0.0; k];
        let mut recorded = 0usize;
        loop {
            for (m, st) in self.stations.iter().enumerate() {
                row[m] = st.vbar(workloads[m]);
            }
            row[k - 1] = 0.0;
            out.push(&row, 0, &[]);
            recorded += 1;

            let action = p.action_for(rng.random::<f64>());
            let (station, work) = if action < self.stations.len() {
                (Some(action), self.stations[action].service.sample(rng))
            } else {
                (None, 0.0)
            };
            let gap = self.inter_arrival.sample(rng);
            advance_workloads(&mut workloads, work, station, gap);
            let empty = workloads.iter().all(|&w| w == 0.0);
            match after_arrival(empty, recorded, recorded, cap, self.safety_limit, strategy, out)? {
                Step::Continue => {}
                Step::Stop => return Ok(()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::simulate_cycle;
    use crate::rng::{substream, Domain};
    use crate::simplex::SimplexPoint;

    fn strat(v: &[f64]) -> BehavioralStrategy {
        SimplexPoint::new(v.to_vec()).unwrap().into()
    }

    #[test]
    fn all_balk_cycle_has_one_arrival() {
        let model = ParallelQueuesModel::single_queue(
            &DistributionSpec::Exponential { rate: 0.5 },
            &DistributionSpec::Exponential { rate: 1.0 },
            5.0,
            1.0,
        )
        .unwrap();
        let mut rng = substream(3, Domain::Test, 0);
        for _ in 0..100 {
            let rec = simulate_cycle(&model, &strat(&[0.0, 1.0]), None, &mut rng).unwrap();
            assert_eq!(rec.cycle_length(), 1);
            assert!(!rec.truncated());
            let rows: Vec<&[f64]> = rec.vbar_rows().collect();
            assert_eq!(rows, vec![&[4.0, 0.0][..]]);
        }
    }

    /// Scalar Lindley recursion driven by the same draw order.
    fn scalar_lindley_cycle(rng: &mut SimRng, service: &Sampler, ia: &Sampler) -> Vec<f64> {
        let mut w = 0.0f64;
        let mut seen = Vec::new();
        loop {
            seen.push(w);
            let _action: f64 = rng.random();
            w += service.sample(rng);
            w = (w - ia.sample(rng)).max(0.0);
            if w == 0.0 {
                return seen;
            }
        }
    }

    #[test]
    fn single_station_matches_scalar_lindley() {
        let ia_spec = DistributionSpec::Gamma { shape: 0.5, scale: 2.0 };
        let svc_spec = DistributionSpec::BetaShiftScale { alpha: 2.0, beta: 3.0, shift: 0.1, scale: 1.2 };
        let model = ParallelQueuesModel::new(
            &ia_spec,
            &[
                StationSpec { service: svc_spec.clone(), reward: 5.0, cost: 1.0 },
                StationSpec { service: DistributionSpec::Exponential { rate: 2.0 }, reward: 5.0, cost: 1.0 },
            ],
        )
        .unwrap();
        let mean = svc_spec.mean();
        for seed in 0..200 {
            let mut a = substream(seed, Domain::Test, 0);
            let mut b = substream(seed, Domain::Test, 0);
            let rec = simulate_cycle(&model, &strat(&[1.0, 0.0, 0.0]), None, &mut a).unwrap();
            let oracle = scalar_lindley_cycle(&mut b, &svc_spec.sampler().unwrap(), &ia_spec.sampler().unwrap());
            assert_eq!(rec.cycle_length(), oracle.len());
            for (row, w) in rec.vbar_rows().zip(&oracle) {
                assert_eq!(row[0], 5.0 - (w + mean));
                // Station 2 never receives work.
                assert_eq!(row[1], 5.0 - 0.5);
                assert_eq!(row[2], 0.0);
            }
        }
    }

    #[test]
    fn cap_truncates_and_agrees_with_uncapped_prefix() {
        let model = ParallelQueuesModel::mm1(0.9, 1.0, 5.0, 1.0).unwrap();
        let s = strat(&[1.0, 0.0]);
        let mut saw_truncation = false;
        for seed in 0..300 {
            let full = simulate_cycle(&model, &s, None, &mut substream(seed, Domain::Test, 1)).unwrap();
            let capped = simulate_cycle(&model, &s, Some(5), &mut substream(seed, Domain::Test, 1)).unwrap();
            if full.cycle_length() <= 5 {
                assert_eq!(full, capped);
            } else {
                saw_truncation = true;
                assert!(capped.truncated());
                assert_eq!(capped.cycle_length(), 5);
                let prefix: Vec<&[f64]> = full.vbar_rows().take(5).collect();
                assert_eq!(prefix, capped.vbar_rows().collect::<Vec<_>>());
            }
        }
        assert!(saw_truncation);
    }

    #[test]
    fn safety_limit_reports_instability() {
        let model = ParallelQueuesModel::mm1(2.0, 1.0, 5.0, 1.0).unwrap().with_safety_limit(1000);
        let mut rng = substream(1, Domain::Test, 0);
        let err = (0..50)
            .find_map(|_| simulate_cycle(&model, &strat(&[1.0, 0.0]), None, &mut rng).err())
            .expect("an overloaded queue should hit the limit");
        match err {
            Error::Instability(msg) => assert!(msg.contains("(1.000000, 0.000000)"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_utility_is_used() {
        let model = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0)
            .unwrap()
            .with_utility(0, StationUtility::Custom(Arc::new(|w| 10.0 - 2.0 * w)))
            .unwrap();
        let rec = simulate_cycle(&model, &strat(&[0.0, 1.0]), None, &mut substream(0, Domain::Test, 0)).unwrap();
        assert_eq!(rec.vbar_rows().next().unwrap(), &[10.0, 0.0]);
    }

    #[test]
    fn wrong_strategy_shape_rejected() {
        let model = ParallelQueuesModel::mm1(0.5, 1.0, 5.0, 1.0).unwrap();
        let mut rng = substream(0, Domain::Test, 0);
        assert!(simulate_cycle(&model, &strat(&[0.2, 0.3, 0.5]), None, &mut rng).is_err());
        assert!(simulate_cycle(&model, &strat(&[0.5, 0.5]), Some(0), &mut rng).is_err());
    }
}
