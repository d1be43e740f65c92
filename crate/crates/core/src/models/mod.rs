//! Queueing games simulated one regeneration cycle at a time.
//!
//! A cycle starts with an arrival to the empty system and ends just before
//! the next arrival that again finds the system empty. For each arrival the
//! model records the conditional expected utility of *every* action, while
//! the action actually taken is drawn from the strategy.

mod observable;
mod parallel;
mod sensing;
mod spec;

pub use observable::ObservableGG1Model;
pub use parallel::{ParallelQueuesModel, StationSpec, StationUtility};
pub use sensing::SensingModel;
pub use spec::ModelSpec;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::strategy::BehavioralStrategy;

/// Cycles longer than this many arrivals abort with an instability error
/// unless a truncation cap stops them first.
pub const DEFAULT_SAFETY_LIMIT: usize = 10_000_000;

/// Everything recorded along one regeneration cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    actions: usize,
    controls_dim: usize,
    vbar: Vec<f64>,
    signals: Vec<usize>,
    controls: Vec<f64>,
    truncated: bool,
}

impl CycleRecord {
    pub fn new(actions: usize, controls_dim: usize) -> Self {
        CycleRecord {
            actions,
            controls_dim,
            vbar: Vec::new(),
            signals: Vec::new(),
            controls: Vec::new(),
            truncated: false,
        }
    }

    /// Builds a record from explicit rows; mostly useful in tests.
    pub fn from_rows(rows: &[Vec<f64>], signals: &[usize]) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || rows.len() != signals.len() || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput(
                "need at least one row, equal row lengths and one signal per row".into(),
            ));
        }
        let mut rec = CycleRecord::new(k, 0);
        for (r, &s) in rows.iter().zip(signals) {
            rec.push(r, s, &[]);
        }
        Ok(rec)
    }

    /// Resets for reuse, keeping allocations.
    pub fn reset(&mut self, actions: usize, controls_dim: usize) {
        self.actions = actions;
        self.controls_dim = controls_dim;
        self.vbar.clear();
        self.signals.clear();
        self.controls.clear();
        self.truncated = false;
    }

    pub fn push(&mut self, vbar_row: &[f64], signal: usize, control_row: &[f64]) {
        debug_assert_eq!(vbar_row.len(), self.actions);
        debug_assert_eq!(control_row.len(), self.controls_dim);
        self.vbar.extend_from_slice(vbar_row);
        self.signals.push(signal);
        self.controls.extend_from_slice(control_row);
    }

    pub fn mark_truncated(&mut self) {
        self.truncated = true;
    }

    /// Number of recorded arrivals (decision epochs), `L`.
    pub fn cycle_length(&self) -> usize {
        self.signals.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions
    }

    pub fn control_dim(&self) -> usize {
        self.controls_dim
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn vbar_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.vbar.chunks_exact(self.actions)
    }

    /// Per-arrival control rows; empty when the model has no controls.
    pub fn control_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        // `controls` is empty when the dimension is 0; the chunk size only
        // has to be nonzero.
        self.controls.chunks_exact(self.controls_dim.max(1))
    }

    pub fn signals(&self) -> &[usize] {
        &self.signals
    }
}

/// A queueing game that can simulate regeneration cycles.
pub trait GameModel: Send + Sync {
    fn name(&self) -> &str;

    /// Number of actions `k`.
    fn action_count(&self) -> usize;

    /// Number of information signals; 1 for unobservable games.
    fn signal_count(&self) -> usize {
        1
    }

    /// Dimension of the per-arrival control-variate rows; 0 if none.
    fn control_dim(&self) -> usize {
        0
    }

    /// Arrivals after which a cap-free cycle is declared unstable.
    fn safety_limit(&self) -> usize {
        DEFAULT_SAFETY_LIMIT
    }

    /// Simulates one cycle from the empty state into `out`.
    ///
    /// With `cap = Some(b)` at most `b` arrivals are recorded and `out` is
    /// marked truncated when the cycle would have continued. The random draws
    /// up to the cap are identical to those of the uncapped cycle.
    fn simulate_cycle_into(
        &self,
        strategy: &BehavioralStrategy,
        cap: Option<usize>,
        rng: &mut SimRng,
        out: &mut CycleRecord,
    ) -> Result<()>;

    /// Cheap approximation of the mean cycle length used to scale the step
    /// size. Defaults to 1 (no scaling).
    fn cycle_length_approx(&self, _strategy: &BehavioralStrategy) -> Result<f64> {
        Ok(1.0)
    }
}

/// Allocating wrapper around [`GameModel::simulate_cycle_into`].
pub fn simulate_cycle(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    cap: Option<usize>,
    rng: &mut SimRng,
) -> Result<CycleRecord> {
    let mut out = CycleRecord::new(model.action_count(), model.control_dim());
    model.simulate_cycle_into(strategy, cap, rng, &mut out)?;
    Ok(out)
}

/// Checks strategy shape and cap before a cycle starts.
pub(crate) fn check_cycle_args(
    model: &dyn GameModel,
    strategy: &BehavioralStrategy,
    cap: Option<usize>,
) -> Result<()> {
    strategy.check_shape(model.action_count(), model.signal_count())?;
    if cap == Some(0) {
        return Err(Error::InvalidInput("truncation cap must be >= 1".into()));
    }
    Ok(())
}

/// What to do after an arrival has been processed.
pub(crate) enum Step {
    Continue,
    Stop,
}

/// Shared end-of-arrival bookkeeping: regeneration, cap and safety limit.
pub(crate) fn after_arrival(
    empty: bool,
    recorded: usize,
    arrivals: usize,
    cap: Option<usize>,
    safety: usize,
    strategy: &BehavioralStrategy,
    out: &mut CycleRecord,
) -> Result<Step> {
    if empty {
        return Ok(Step::Stop);
    }
    if let Some(b) = cap {
        if recorded >= b {
            out.mark_truncated();
            return Ok(Step::Stop);
        }
    }
    if arrivals >= safety {
        return Err(Error::Instability(format!(
            "cycle exceeded {safety} arrivals without emptying under strategy {strategy}"
        )));
    }
    Ok(Step::Continue)
}

/// One Lindley step on a vector of station workloads: `added_work` joins
/// `station`, then every station drains for `inter_arrival` time units.
///
/// Workloads reach an exact `0.0` once drained.
pub fn workload_recursion(
    state: &[f64],
    added_work: f64,
    station: Option<usize>,
    inter_arrival: f64,
) -> Vec<f64> {
    let mut next = state.to_vec();
    advance_workloads(&mut next, added_work, station, inter_arrival);
    next
}

pub(crate) fn advance_workloads(
    state: &mut [f64],
    added_work: f64,
    station: Option<usize>,
    inter_arrival: f64,
) {
    if let Some(m) = station {
        state[m] += added_work;
    }
    for w in state.iter_mut() {
        *w = (*w - inter_arrival).max(0.0);
    }
}
