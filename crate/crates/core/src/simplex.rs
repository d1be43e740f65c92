//! Geometry of the strategy simplex.
//!
//! The probability simplex over `k` actions is the set of nonnegative vectors
//! summing to one. The stochastic-approximation iteration moves a strategy
//! along an estimated utility direction and maps the result back with the
//! Euclidean projection [`project_simplex`]. Only the component of the
//! direction lying in the zero-sum hyperplane matters for that projection
//! (see [`project_hyperplane`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the coordinate sum of a [`SimplexPoint`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Sum deviation below which [`project_simplex`] treats its input as already
/// projected.
pub const IDEMPOTENCE_SLACK: f64 = 1e-12;

/// A mixed strategy: a probability vector over `k >= 2` actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `probs` and renormalizes small floating-point drift.
    ///
    /// Coordinates must be finite and nonnegative (values above `-1e-12` are
    /// clamped to zero) and sum to one within [`SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a strategy needs at least 2 actions, got {}",
                probs.len()
            )));
        }
        let mut probs = probs;
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidInput(format!("coordinate {i} is {p}")));
            }
            if *p < 0.0 {
                if *p < -1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "coordinate {i} is negative ({p})"
                    )));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "coordinates sum to {sum}, expected 1"
            )));
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(SimplexPoint(probs))
    }

    /// The uniform strategy over `k` actions.
    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "a strategy needs at least 2 actions, got {k}"
            )));
        }
        Ok(SimplexPoint(vec![1.0 / k as f64; k]))
    }

    /// All mass on action `i`.
    pub fn vertex(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return Err(Error::InvalidInput(format!("vertex {i} out of range for k={k}")));
        }
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        SimplexPoint::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Expected payoff `u'p` of playing this strategy against utilities `u`.
    pub fn dot(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(p, u)| p * u).sum()
    }

    /// Draws an action index given a uniform variate in `[0, 1)`.
    pub fn action_for(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap above the cumulative sum: take the
        // last action carrying positive mass.
        self.0.iter().rposition(|&p| p > 0.0).unwrap_or(self.0.len() - 1)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:.6}")?;
        }
        write!(f, ")")
    }
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "projection needs dimension >= 2, got {}",
            x.len()
        )));
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("coordinate {i} is {v}")));
    }
    Ok(())
}

/// Euclidean projection of `x` onto the probability simplex.
///
/// Sort-based: with `u` sorted in descending order, the pivot `rho` is the
/// largest index with `u[rho] > (sum(u[..=rho]) - 1) / (rho + 1)`; every
/// coordinate is then shifted by that threshold and clipped at zero.
///
/// Points already on the simplex (nonnegative, sum within [`IDEMPOTENCE_SLACK`]
/// of one) are returned unchanged, which makes the projection exactly
/// idempotent.
pub fn project_simplex(x: &[f64]) -> Result<SimplexPoint> {
    check_input(x)?;
    let sum: f64 = x.iter().sum();
    if x.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= IDEMPOTENCE_SLACK {
        return Ok(SimplexPoint(x.to_vec()));
    }

    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    Ok(SimplexPoint(x.iter().map(|&v| (v - theta).max(0.0)).collect()))
}

/// Orthogonal projection onto the zero-sum hyperplane: `x - mean(x) * 1`.
pub fn project_hyperplane(x: &[f64]) -> Result<Vec<f64>> {
    check_input(x)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok(x.iter().map(|v| v - mean).collect())
}

/// Euclidean projection onto `{q in simplex : lower <= q <= upper}`.
///
/// This is the only restricted strategy set supported: the simplex intersected
/// with a coordinate box. The threshold is located by bisection on the
/// monotone map `theta -> sum(clamp(x - theta, lower, upper))`.
pub fn project_capped_simplex(x: &[f64], lower: &[f64], upper: &[f64]) -> Result<SimplexPoint> {
    check_input(x)?;
    let k = x.len();
    if lower.len() != k || upper.len() != k {
        return Err(Error::InvalidInput("box bounds must match the dimension".into()));
    }
    for i in 0..k {
        if !(0.0..=1.0).contains(&lower[i]) || !(lower[i]..=1.0).contains(&upper[i]) {
            return Err(Error::InvalidInput(format!(
                "bounds for coordinate {i} must satisfy 0 <= lower <= upper <= 1"
            )));
        }
    }
    let lo_sum: f64 = lower.iter().sum();
    let hi_sum: f64 = upper.iter().sum();
    if lo_sum > 1.0 + SUM_TOLERANCE || hi_sum < 1.0 - SUM_TOLERANCE {
        return Err(Error::InvalidInput(
            "box does not intersect the simplex".into(),
        ));
    }

    let clamped = |theta: f64| -> Vec<f64> {
        (0..k)
            .map(|i| (x[i] - theta).clamp(lower[i], upper[i]))
            .collect()
    };
    let total = |theta: f64| clamped(theta).iter().sum::<f64>();

    let max_x = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_x = x.iter().cloned().fold(f64::INFINITY, f64::min);
    // At `lo` every coordinate sits at its upper bound, at `hi` at its lower bound.
    let mut lo = min_x - 1.0;
    let mut hi = max_x;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = clamped(0.5 * (lo + hi));
    SimplexPoint::new(q)
}
