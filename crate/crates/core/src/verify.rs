//! Certifying that a fixed strategy is an epsilon-equilibrium.
//!
//! With the strategy held fixed, cycles are i.i.d., so the mean utility of
//! every action is the ratio `E[G] / E[L]` of per-cycle sums. Cycles are
//! grouped into independent batches, each batch running on its own random
//! substream; the ratio's confidence interval comes from the batch sums via
//! the delta method and a Student-t quantile.
//!
//! For observable games the quantity estimated for signal `s` is
//! `E[G(s)] / E[L] = xi(s) u(p | s)`, the signal's share of the per-customer
//! utility. The deviation gain of a behavioral strategy is the sum over
//! signals of `max_i w_i(s) - p(s)' w(s)`, which reduces to the usual gap
//! when there is one signal.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimator::per_signal_g;
use crate::models::{CycleRecord, GameModel};
use crate::rng::{substream, Domain};
use crate::strategy::BehavioralStrategy;

pub const DEFAULT_BATCHES: usize = 30;
pub const DEFAULT_ALPHA: f64 = 0.005;

/// Simulation effort for [`estimate_values`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Total cycles, split evenly across batches.
    Cycles(u64),
    /// Total arrivals; each batch simulates whole cycles until it has seen
    /// its share.
    Arrivals(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub budget: Budget,
    pub batches: usize,
    /// Family-wide significance level, split evenly over all intervals.
    pub alpha: f64,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn new(budget: Budget, seed: u64) -> Self {
        VerifyConfig { budget, batches: DEFAULT_BATCHES, alpha: DEFAULT_ALPHA, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches < 2 {
            return Err(Error::config("verify.batches", "must be >= 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("verify.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        let total = match self.budget {
            Budget::Cycles(c) => c,
            Budget::Arrivals(a) => a,
        };
        if total < self.batches as u64 {
            return Err(Error::config(
                "verify.budget",
                format!("{total} is smaller than the {} batches", self.batches),
            ));
        }
        Ok(())
    }
}

/// Per-signal, per-action utility estimates with simultaneous confidence
/// half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    /// `values[s][i]` estimates `E[G_i(s)] / E[L]`.
    pub values: Vec<Vec<f64>>,
    pub half_widths: Vec<Vec<f64>>,
    /// Fraction of decision epochs at each signal.
    pub signal_frequency: Vec<f64>,
    pub alpha: f64,
    pub batches: usize,
    pub cycles: u64,
    pub arrivals: u64,
}

impl ValueEstimate {
    /// Per-action mean utilities of a single-signal game.
    pub fn utilities(&self) -> &[f64] {
        &self.values[0]
    }

    /// Conditional utilities `u(p | s)`; `None` if `s` was never observed.
    pub fn conditional(&self, s: usize) -> Option<Vec<f64>> {
        let f = self.signal_frequency[s];
        (f > 0.0).then(|| self.values[s].iter().map(|v| v / f).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCertificate {
    pub epsilon_hat: f64,
    pub epsilon_hi: f64,
    pub confidence: f64,
    pub target: Option<f64>,
    pub certified: Option<bool>,
}

impl EpsilonCertificate {
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self.certified = Some(self.epsilon_hi <= target);
        self
    }
}

#[derive(Debug, Clone, Default)]
struct BatchSums {
    g: Vec<Vec<f64>>,
    visits: Vec<u64>,
    arrivals: u64,
    cycles: u64,
}

fn run_batch(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    config: &VerifyConfig,
    b: usize,
) -> Result<BatchSums> {
    let k = model.action_count();
    let signals = model.signal_count();
    let batches = config.batches as u64;
    let mut rng = substream(config.seed, Domain::Verification, b as u64);
    let mut record = CycleRecord::new(k, model.control_dim());
    let mut sums = BatchSums {
        g: vec![vec![0.0; k]; signals],
        visits: vec![0; signals],
        ..BatchSums::default()
    };
    let (target, by_arrivals) = match config.budget {
        Budget::Cycles(c) => (c / batches + u64::from((b as u64) < c % batches), false),
        Budget::Arrivals(a) => (a / batches + u64::from((b as u64) < a % batches), true),
    };
    loop {
        let done = if by_arrivals { sums.arrivals } else { sums.cycles };
        if done >= target {
            break;
        }
        model.simulate_cycle_into(strategy, None, &mut rng, &mut record)?;
        sums.cycles += 1;
        sums.arrivals += record.cycle_length() as u64;
        for (acc, g) in sums.g.iter_mut().zip(per_signal_g(&record, signals)?) {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
        for &s in record.signals() {
            sums.visits[s] += 1;
        }
    }
    Ok(sums)
}

#[cfg(feature = "parallel")]
fn all_batches(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    config: &VerifyConfig,
) -> Result<Vec<BatchSums>> {
    use rayon::prelude::*;
    (0..config.batches)
        .into_par_iter()
        .map(|b| run_batch(model, strategy, config, b))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn all_batches(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    config: &VerifyConfig,
) -> Result<Vec<BatchSums>> {
    (0..config.batches).map(|b| run_batch(model, strategy, config, b)).collect()
}

/// Estimates every action's mean utility under the fixed `strategy`.
///
/// Batches may run concurrently; results depend only on the seed.
pub fn estimate_values(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    config: &VerifyConfig,
) -> Result<ValueEstimate> {
    config.validate()?;
    let k = model.action_count();
    let signals = model.signal_count();
    strategy.check_shape(k, signals)?;
    let batches = all_batches(model, strategy, config)?;
    let nb = batches.len() as f64;

    let total_l: u64 = batches.iter().map(|b| b.arrivals).sum();
    let cycles: u64 = batches.iter().map(|b| b.cycles).sum();
    let mean_l = total_l as f64 / nb;
    let intervals = (k * signals) as f64;
    let t = StudentsT::new(0.0, 1.0, nb - 1.0)
        .map_err(|e| Error::InvalidInput(e.to_string()))?
        .inverse_cdf(1.0 - config.alpha / (2.0 * intervals));

    let mut values = vec![vec![0.0; k]; signals];
    let mut half_widths = vec![vec![0.0; k]; signals];
    for s in 0..signals {
        for i in 0..k {
            let total_g: f64 = batches.iter().map(|b| b.g[s][i]).sum();
            let u = total_g / total_l as f64;
            // Delta method on the ratio: residuals z_b = G_b - u L_b.
            let z: Vec<f64> = batches.iter().map(|b| b.g[s][i] - u * b.arrivals as f64).collect();
            let zbar = z.iter().sum::<f64>() / nb;
            let var = z.iter().map(|v| (v - zbar).powi(2)).sum::<f64>() / (nb - 1.0);
            values[s][i] = u;
            half_widths[s][i] = t * (var / nb).sqrt() / mean_l;
        }
    }
    let signal_frequency = (0..signals)
        .map(|s| batches.iter().map(|b| b.visits[s]).sum::<u64>() as f64 / total_l as f64)
        .collect();
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Instability("utility estimate is not finite".into()));
    }
    Ok(ValueEstimate {
        values,
        half_widths,
        signal_frequency,
        alpha: config.alpha,
        batches: config.batches,
        cycles,
        arrivals: total_l,
    })
}

/// Largest gain from deviating, point estimate and conservative upper bound.
pub fn epsilon_gap(estimate: &ValueEstimate, strategy: &BehavioralStrategy) -> Result<EpsilonCertificate> {
    let k = estimate.values.first().map_or(0, Vec::len);
    strategy.check_shape(k, estimate.values.len())?;
    let mut hat = 0.0;
    let mut hi = 0.0;
    for (s, (w, h)) in estimate.values.iter().zip(&estimate.half_widths).enumerate() {
        let p = strategy.at(s).probs();
        let best = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let played: f64 = p.iter().zip(w).map(|(p, w)| p * w).sum();
        hat += (best - played).max(0.0);
        let best_hi = w.iter().zip(h).map(|(w, h)| w + h).fold(f64::NEG_INFINITY, f64::max);
        let played_lo: f64 = p.iter().zip(w.iter().zip(h)).map(|(p, (w, h))| p * (w - h)).sum();
        hi += (best_hi - played_lo).max(0.0);
    }
    Ok(EpsilonCertificate {
        epsilon_hat: hat,
        epsilon_hi: hi.max(hat),
        confidence: 1.0 - estimate.alpha,
        target: None,
        certified: None,
    })
}

/// Closed forms for the M/M/1 join-or-balk game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mm1Oracle {
    /// Mean workload seen by arrivals when everyone joins, if stable.
    pub mean_workload: Option<f64>,
    /// Unobservable equilibrium joining probability.
    pub p_e: Option<f64>,
    /// Observable balking threshold `floor(R mu / C)`.
    #[serde(rename = "K")]
    pub threshold: u64,
}

/// Mean workload found by arrivals to an M/M/1 queue with arrival rate `a`.
pub fn mm1_mean_workload(a: f64, mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!("service rate must be > 0, got {mu}")));
    }
    if !(a.is_finite() && a >= 0.0 && a < mu) {
        return Err(Error::Domain(format!("arrival rate {a} outside [0, {mu})")));
    }
    Ok(a / (mu * (mu - a)))
}

/// Joining utility `R - C (w(a) + 1/mu)` at effective arrival rate `a`.
pub fn mm1_join_utility(a: f64, mu: f64, reward: f64, cost: f64) -> Result<f64> {
    Ok(reward - cost * (mm1_mean_workload(a, mu)? + 1.0 / mu))
}

pub fn mm1_oracles(lambda: Option<f64>, mu: f64, reward: f64, cost: f64) -> Result<Mm1Oracle> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!("service rate must be > 0, got {mu}")));
    }
    if !(reward.is_finite() && reward > 0.0 && cost.is_finite() && cost > 0.0) {
        return Err(Error::Domain(format!("reward and cost must be > 0, got R = {reward}, C = {cost}")));
    }
    let threshold = (reward * mu / cost).floor() as u64;
    let Some(lambda) = lambda else {
        return Ok(Mm1Oracle { mean_workload: None, p_e: None, threshold });
    };
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("arrival rate must be > 0, got {lambda}")));
    }
    let mean_workload = (lambda < mu).then(|| lambda / (mu * (mu - lambda)));
    // Tolerable mean wait tau solves a / (mu (mu - a)) = tau for a.
    let tau = reward / cost - 1.0 / mu;
    let p_e = if tau <= 0.0 {
        0.0
    } else {
        let a = tau * mu * mu / (1.0 + tau * mu);
        if a >= lambda {
            if lambda >= mu {
                return Err(Error::Domain(format!(
                    "everyone joins at lambda = {lambda} >= mu = {mu}: the queue is unstable"
                )));
            }
            1.0
        } else {
            a / lambda
        }
    };
    Ok(Mm1Oracle { mean_workload, p_e: Some(p_e), threshold })
}
