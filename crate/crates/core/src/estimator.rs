//! Direction estimates built from one regeneration cycle.
//!
//! Summing the conditional utility rows over a cycle, `G = sum_j vbar(X_j)`,
//! gives an unbiased estimate of `l(p) * u(p)` where `l(p)` is the mean
//! cycle length. Because `l(p) >= 1` only rescales the direction, `G` can
//! drive the projected iteration directly, without the length bias of
//! per-cycle averages.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::models::CycleRecord;

/// `G = sum_j vbar(X_j)`, one entry per action.
pub fn raw_g(cycle: &CycleRecord) -> Vec<f64> {
    let mut g = vec![0.0; cycle.action_count()];
    for row in cycle.vbar_rows() {
        for (acc, v) in g.iter_mut().zip(row) {
            *acc += v;
        }
    }
    g
}

/// `G(s) = sum_j vbar(X_j) 1(signal_j = s)` for every signal `s`.
///
/// Returned signal-major: `out[s]` is the `k`-vector for signal `s`. The
/// per-signal vectors add up to [`raw_g`] exactly.
pub fn per_signal_g(cycle: &CycleRecord, signal_count: usize) -> Result<Vec<Vec<f64>>> {
    let k = cycle.action_count();
    let mut out = vec![vec![0.0; k]; signal_count];
    for (row, &s) in cycle.vbar_rows().zip(cycle.signals()) {
        let col = out.get_mut(s).ok_or_else(|| {
            Error::InvalidInput(format!("signal {s} out of range for {signal_count} signals"))
        })?;
        for (acc, v) in col.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok(out)
}

/// Column sums of the control rows, `C = sum_j c_j`.
pub fn control_sum(cycle: &CycleRecord) -> Vec<f64> {
    let mut c = vec![0.0; cycle.control_dim()];
    for row in cycle.control_rows() {
        for (acc, v) in c.iter_mut().zip(row) {
            *acc += v;
        }
    }
    c
}

/// What a sensing-model arrival contributes to the control vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingArrival {
    pub sensed: bool,
    pub service: f64,
    pub server1_busy: bool,
}

/// `(D - p, Y - 1/mu, 1(busy) - lambda p / (mu + lambda p))` for one arrival.
pub fn sensing_control_row(arrival: &SensingArrival, sense_prob: f64, lambda: f64, mu: f64) -> [f64; 3] {
    let d = if arrival.sensed { 1.0 } else { 0.0 };
    let busy = if arrival.server1_busy { 1.0 } else { 0.0 };
    let offered = lambda * sense_prob;
    [d - sense_prob, arrival.service - 1.0 / mu, busy - offered / (mu + offered)]
}

/// Control sums over a sensing-model cycle. Each component has zero mean
/// under the strategy that generated the cycle.
pub fn sensing_controls(arrivals: &[SensingArrival], sense_prob: f64, lambda: f64, mu: f64) -> [f64; 3] {
    arrivals.iter().fold([0.0; 3], |mut acc, a| {
        let row = sensing_control_row(a, sense_prob, lambda, mu);
        for (s, r) in acc.iter_mut().zip(row) {
            *s += r;
        }
        acc
    })
}

pub const DEFAULT_WARMUP: u64 = 50;
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

/// Running second moments of `(G, C)` pairs for the control-variate
/// adjustment `G - Psi' C` with `Psi' = Sigma_GC Sigma_CC^{-1}`.
///
/// All history is pooled even though the strategy changes between samples.
/// Moments use the `1/(n-1)` normalization around zero (the controls have
/// known zero mean).
#[derive(Debug, Clone)]
pub struct ControlVariateState {
    actions: usize,
    controls: usize,
    n: u64,
    sum_cc: DMatrix<f64>,
    sum_gc: DMatrix<f64>,
    warmup_min: u64,
    max_condition: f64,
    last_condition: Option<f64>,
}

impl ControlVariateState {
    pub fn new(actions: usize, controls: usize) -> Self {
        ControlVariateState {
            actions,
            controls,
            n: 0,
            sum_cc: DMatrix::zeros(controls, controls),
            sum_gc: DMatrix::zeros(actions, controls),
            warmup_min: DEFAULT_WARMUP,
            max_condition: DEFAULT_MAX_CONDITION,
            last_condition: None,
        }
    }

    pub fn with_warmup(mut self, warmup_min: u64) -> Self {
        self.warmup_min = warmup_min;
        self
    }

    pub fn with_max_condition(mut self, max_condition: f64) -> Self {
        self.max_condition = max_condition;
        self
    }

    pub fn sample_count(&self) -> u64 {
        self.n
    }

    /// Condition number of `Sigma_CC` at the last adjustment attempt.
    pub fn last_condition(&self) -> Option<f64> {
        self.last_condition
    }

    /// Adds one `(G, C)` pair to the running moments.
    pub fn observe(&mut self, g: &[f64], c: &[f64]) {
        debug_assert_eq!(g.len(), self.actions);
        debug_assert_eq!(c.len(), self.controls);
        for (i, ci) in c.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                self.sum_cc[(i, j)] += ci * cj;
            }
        }
        for (i, gi) in g.iter().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                self.sum_gc[(i, j)] += gi * cj;
            }
        }
        self.n += 1;
    }

    fn norm(&self) -> f64 {
        if self.n > 1 {
            1.0 / (self.n - 1) as f64
        } else {
            1.0
        }
    }

    /// `Sigma_CC` estimate, `l x l`.
    pub fn sigma_cc(&self) -> DMatrix<f64> {
        &self.sum_cc * self.norm()
    }

    /// `Sigma_GC` estimate, `k x l`.
    pub fn sigma_gc(&self) -> DMatrix<f64> {
        &self.sum_gc * self.norm()
    }

    /// `Psi' = Sigma_GC Sigma_CC^{-1}` (`k x l`), or `None` during warm-up or
    /// when `Sigma_CC` is too ill-conditioned to invert.
    pub fn coefficients(&mut self) -> Option<DMatrix<f64>> {
        if self.controls == 0 || self.n < self.warmup_min.max(2) {
            return None;
        }
        let cc = self.sigma_cc();
        let eig = SymmetricEigen::new(cc.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        self.last_condition = Some(cond);
        // NaN must also fall back.
        if cond.is_nan() || cond > self.max_condition {
            return None;
        }
        // Sigma_CC is symmetric, so Psi = Sigma_CC^{-1} Sigma_GC'.
        let psi = cc.lu().solve(&self.sigma_gc().transpose())?;
        Some(psi.transpose())
    }

    /// `G - Psi' C` using the moments gathered so far; `G` unchanged during
    /// warm-up or when `Sigma_CC` is degenerate. Does not record the pair.
    pub fn adjust(&mut self, g: &[f64], c: &[f64]) -> Vec<f64> {
        match self.coefficients() {
            None => g.to_vec(),
            Some(psi_t) => {
                let correction = psi_t * DVector::from_column_slice(c);
                g.iter().zip(correction.iter()).map(|(g, d)| g - d).collect()
            }
        }
    }
}
