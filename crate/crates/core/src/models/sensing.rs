use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{after_arrival, check_cycle_args, CycleRecord, GameModel, Step, DEFAULT_SAFETY_LIMIT};
use crate::distributions::{DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::estimator::{sensing_control_row, SensingArrival};
use crate::rng::SimRng;
use crate::strategy::BehavioralStrategy;

/// Two servers fed by a Poisson stream: Server 1 has no waiting room,
/// Server 2 an unlimited FCFS queue. Action 0 ("sense") pays `sensing_cost`
/// to try Server 1 and falls back to the Server 2 queue when it is busy;
/// action 1 goes straight to the queue. Waiting in the queue costs
/// `waiting_cost` per time unit.
///
/// State is the pair of workloads. Each arrival also records the three
/// zero-mean control sums `(D - p, Y - 1/mu, busy_1 - lambda p / (mu + lambda p))`.
///
/// Draw order per arrival: action uniform, service time, inter-arrival time.
#[derive(Debug, Clone)]
pub struct SensingModel {
    lambda: f64,
    mu: f64,
    service: Sampler,
    inter_arrival: Exp<f64>,
    sensing_cost: f64,
    waiting_cost: f64,
    safety_limit: usize,
}

impl SensingModel {
    pub fn new(
        lambda: f64,
        service: &DistributionSpec,
        sensing_cost: f64,
        waiting_cost: f64,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::config("lambda", format!("must be > 0, got {lambda}")));
        }
        let service = service
            .sampler()
            .map_err(|e| Error::config("service", e.to_string()))?;
        if service.mean() <= 0.0 {
            return Err(Error::config("service", "mean service time must be > 0"));
        }
        for (field, v) in [("sensing_cost", sensing_cost), ("waiting_cost", waiting_cost)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(SensingModel {
            lambda,
            mu: 1.0 / service.mean(),
            service,
            inter_arrival: Exp::new(lambda).map_err(|e| Error::config("lambda", e.to_string()))?,
            sensing_cost,
            waiting_cost,
            safety_limit: DEFAULT_SAFETY_LIMIT,
        })
    }

    pub fn with_safety_limit(mut self, limit: usize) -> Self {
        self.safety_limit = limit.max(1);
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_stable(&self) -> bool {
        self.lambda < self.mu
    }

    /// Probability that an arrival finds Server 1 busy, treating Server 1 as
    /// an Erlang loss system with offered load `lambda p / mu`.
    pub fn server1_busy_probability(&self, sense_prob: f64) -> f64 {
        let a = self.lambda * sense_prob;
        a / (self.mu + a)
    }

    /// Mean cycle length approximation obtained by treating the two servers
    /// as independent Markovian queues: `1 / (pi0_1 * pi0_2)`.
    pub fn approx_cycle_length(&self, sense_prob: f64) -> Result<f64> {
        let lambda1 = sense_prob * self.lambda;
        let lambda2 = self.lambda * (1.0 - sense_prob + lambda1 / (lambda1 + self.mu));
        let idle1 = self.mu / (self.mu + lambda1);
        let idle2 = 1.0 - lambda2 / self.mu;
        let both = idle1 * idle2;
        if !(both > 0.0 && both.is_finite()) {
            return Err(Error::config(
                "dynamic_step",
                format!(
                    "cycle-length approximation is not positive at sensing probability {sense_prob} \
                     (Server 2 idle probability {idle2})"
                ),
            ));
        }
        Ok(1.0 / both)
    }
}

impl GameModel for SensingModel {
    fn name(&self) -> &str {
        "sensing"
    }

    fn action_count(&self) -> usize {
        2
    }

    fn control_dim(&self) -> usize {
        3
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
        out.reset(2, 3);
        let p = strategy.at(0);
        let sense_prob = p.probs()[0];
        let (mut x1, mut x2) = (0.0f64, 0.0f64);
        let mut recorded = 0usize;
        loop {
            let busy = x1 > 0.0;
            let row = [
                -self.sensing_cost - self.waiting_cost * if busy { x2 } else { 0.0 },
                -self.waiting_cost * x2,
            ];
            let sensed = p.action_for(rng.random::<f64>()) == 0;
            let y = self.service.sample(rng);
            let controls = sensing_control_row(
                &SensingArrival { sensed, service: y, server1_busy: busy },
                sense_prob,
                self.lambda,
                self.mu,
            );
            out.push(&row, 0, &controls);
            recorded += 1;

            if sensed && !busy {
                x1 += y;
            } else {
                x2 += y;
            }
            let gap = self.inter_arrival.sample(rng);
            x1 = (x1 - gap).max(0.0);
            x2 = (x2 - gap).max(0.0);
            let empty = x1 == 0.0 && x2 == 0.0;
            match after_arrival(empty, recorded, recorded, cap, self.safety_limit, strategy, out)? {
                Step::Continue => {}
                Step::Stop => return Ok(()),
            }
        }
    }

    fn cycle_length_approx(&self, strategy: &BehavioralStrategy) -> Result<f64> {
        self.approx_cycle_length(strategy.at(0).probs()[0])
    }
}
