use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// A map from observed signals `0..signal_count` to mixed actions.
///
/// Unobservable games use a single signal, in which case the behavioral
/// strategy is just one [`SimplexPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SimplexPoint>", into = "Vec<SimplexPoint>")]
pub struct BehavioralStrategy(Vec<SimplexPoint>);

impl BehavioralStrategy {
    pub fn new(per_signal: Vec<SimplexPoint>) -> Result<Self> {
        let first = per_signal
            .first()
            .ok_or_else(|| Error::InvalidInput("a behavioral strategy needs at least one signal".into()))?;
        let k = first.dim();
        if let Some(s) = per_signal.iter().position(|p| p.dim() != k) {
            return Err(Error::InvalidInput(format!(
                "signal {s} has {} actions, signal 0 has {k}",
                per_signal[s].dim()
            )));
        }
        Ok(BehavioralStrategy(per_signal))
    }

    /// The same mixed action at every signal.
    pub fn constant(p: SimplexPoint, signal_count: usize) -> Result<Self> {
        BehavioralStrategy::new(vec![p; signal_count])
    }

    pub fn signal_count(&self) -> usize {
        self.0.len()
    }

    pub fn action_count(&self) -> usize {
        self.0[0].dim()
    }

    pub fn at(&self, signal: usize) -> &SimplexPoint {
        &self.0[signal]
    }

    pub fn set(&mut self, signal: usize, p: SimplexPoint) {
        debug_assert_eq!(p.dim(), self.action_count());
        self.0[signal] = p;
    }

    pub fn per_signal(&self) -> &[SimplexPoint] {
        &self.0
    }

    /// Checks the shape against a model's action and signal counts.
    pub fn check_shape(&self, actions: usize, signals: usize) -> Result<()> {
        if self.action_count() != actions || self.signal_count() != signals {
            return Err(Error::InvalidInput(format!(
                "strategy has {} signal(s) x {} action(s), model expects {signals} x {actions}",
                self.signal_count(),
                self.action_count()
            )));
        }
        Ok(())
    }

    /// All coordinates, signal-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flat_map(|p| p.probs().iter().copied()).collect()
    }
}

impl From<SimplexPoint> for BehavioralStrategy {
    fn from(p: SimplexPoint) -> Self {
        BehavioralStrategy(vec![p])
    }
}

impl TryFrom<Vec<SimplexPoint>> for BehavioralStrategy {
    type Error = Error;

    fn try_from(v: Vec<SimplexPoint>) -> Result<Self> {
        BehavioralStrategy::new(v)
    }
}

impl From<BehavioralStrategy> for Vec<SimplexPoint> {
    fn from(s: BehavioralStrategy) -> Self {
        s.0
    }
}

impl std::fmt::Display for BehavioralStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "[")?;
        for (s, p) in self.0.iter().enumerate() {
            if s > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}: {p}")?;
        }
        write!(f, "]")
    }
}
