use std::collections::VecDeque;

use rand::Rng;

use super::{after_arrival, check_cycle_args, CycleRecord, GameModel, Step, DEFAULT_SAFETY_LIMIT};
use crate::distributions::{DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::strategy::BehavioralStrategy;

/// Largest admissible balking threshold; bounds the strategy dimension.
pub const MAX_THRESHOLD: usize = 10_000;

/// Observable FCFS GI/G/1 queue. An arrival sees the number in system `n`
/// and either joins (action 0) or balks (action 1).
///
/// Arrivals seeing more than `K = floor(R mu / C)` customers always balk and
/// are not decision epochs: they produce no row and do not count toward the
/// cycle length. At a decision epoch the signal is `n` and the joining value
/// is `R - C (max(n, 1) / mu + residual)`, where `residual` is the remaining
/// service of the customer in service (0 when empty): the customer waits for
/// the residual, for `n - 1` fresh services, and for its own service.
///
/// The state is kept as the FCFS list of scheduled departure times.
#[derive(Debug, Clone)]
pub struct ObservableGG1Model {
    inter_arrival: Sampler,
    service: Sampler,
    mu: f64,
    reward: f64,
    cost: f64,
    threshold: usize,
    safety_limit: usize,
}

impl ObservableGG1Model {
    pub fn new(
        inter_arrival: &DistributionSpec,
        service: &DistributionSpec,
        reward: f64,
        cost: f64,
    ) -> Result<Self> {
        let ia = inter_arrival
            .sampler()
            .map_err(|e| Error::config("inter_arrival", e.to_string()))?;
        if ia.mean() <= 0.0 {
            return Err(Error::config("inter_arrival", "mean inter-arrival time must be > 0"));
        }
        let svc = service.sampler().map_err(|e| Error::config("service", e.to_string()))?;
        if svc.mean() <= 0.0 {
            return Err(Error::config("service", "mean service time must be > 0"));
        }
        if !(reward.is_finite() && reward > 0.0) {
            return Err(Error::config("reward", format!("must be > 0, got {reward}")));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(Error::config("cost", format!("must be > 0, got {cost}")));
        }
        let mu = 1.0 / svc.mean();
        let threshold = (reward * mu / cost).floor();
        if threshold > MAX_THRESHOLD as f64 {
            return Err(Error::config(
                "reward",
                format!("threshold floor(R mu / C) = {threshold} exceeds {MAX_THRESHOLD} signals"),
            ));
        }
        Ok(ObservableGG1Model {
            inter_arrival: ia,
            service: svc,
            mu,
            reward,
            cost,
            threshold: threshold as usize,
            safety_limit: DEFAULT_SAFETY_LIMIT,
        })
    }

    pub fn with_safety_limit(mut self, limit: usize) -> Self {
        self.safety_limit = limit.max(1);
        self
    }

    /// Balking threshold `K`.
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Joining value at a decision epoch with `in_system` customers present
    /// and `residual` service left for the one being served.
    pub fn join_value(&self, in_system: usize, residual: f64) -> f64 {
        self.reward - self.cost * (in_system.max(1) as f64 / self.mu + residual)
    }
}

impl GameModel for ObservableGG1Model {
    fn name(&self) -> &str {
        "observable_gg1"
    }

    fn action_count(&self) -> usize {
        2
    }

    fn signal_count(&self) -> usize {
        self.threshold + 1
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
        out.reset(2, 0);
        let mut departures: VecDeque<f64> = VecDeque::new();
        let mut now = 0.0f64;
        let mut recorded = 0usize;
        let mut arrivals = 0usize;
        loop {
            arrivals += 1;
            let in_system = departures.len();
            if in_system <= self.threshold {
                let residual = departures.front().map_or(0.0, |d| d - now);
                out.push(&[self.join_value(in_system, residual), 0.0], in_system, &[]);
                recorded += 1;
                let p = strategy.at(in_system);
                if p.action_for(rng.random::<f64>()) == 0 {
                    let start = departures.back().map_or(now, |&d| d.max(now));
                    departures.push_back(start + self.service.sample(rng));
                }
            }
            now += self.inter_arrival.sample(rng);
            while departures.front().is_some_and(|&d| d <= now) {
                departures.pop_front();
            }
            match after_arrival(
                departures.is_empty(),
                recorded,
                arrivals,
                cap,
                self.safety_limit,
                strategy,
                out,
            )? {
                Step::Continue => {}
                Step::Stop => return Ok(()),
            }
        }
    }
}
