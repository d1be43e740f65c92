//! Inter-arrival and service-time distributions.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative time distribution, tagged by `kind` in configuration files.
///
/// `Gamma` uses the (shape, scale) convention, so its mean is `shape * scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    /// `shift + scale * Beta(alpha, beta)`.
    BetaShiftScale { alpha: f64, beta: f64, shift: f64, scale: f64 },
    /// `value * Bernoulli(success_prob)`.
    ScaledBernoulli { success_prob: f64, value: f64 },
    Deterministic { value: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(name, format!("must be finite and > 0, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(name, format!("must be finite and >= 0, got {v}")))
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        match *self {
            Exponential { rate } => positive("rate", rate),
            Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            Uniform { lo, hi } => {
                nonnegative("lo", lo)?;
                if !(hi.is_finite() && hi > lo) {
                    return Err(Error::config("hi", format!("must exceed lo={lo}, got {hi}")));
                }
                Ok(())
            }
            BetaShiftScale { alpha, beta, shift, scale } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                nonnegative("shift", shift)?;
                positive("scale", scale)
            }
            ScaledBernoulli { success_prob, value } => {
                if !(0.0..=1.0).contains(&success_prob) {
                    return Err(Error::config(
                        "success_prob",
                        format!("must lie in [0, 1], got {success_prob}"),
                    ));
                }
                positive("value", value)
            }
            Deterministic { value } => nonnegative("value", value),
        }
    }

    /// Exact mean.
    pub fn mean(&self) -> f64 {
        use DistributionSpec::*;
        match *self {
            Exponential { rate } => 1.0 / rate,
            Gamma { shape, scale } => shape * scale,
            Uniform { lo, hi } => 0.5 * (lo + hi),
            BetaShiftScale { alpha, beta, shift, scale } => shift + scale * alpha / (alpha + beta),
            ScaledBernoulli { success_prob, value } => success_prob * value,
            Deterministic { value } => value,
        }
    }

    /// Exact variance.
    pub fn variance(&self) -> f64 {
        use DistributionSpec::*;
        match *self {
            Exponential { rate } => 1.0 / (rate * rate),
            Gamma { shape, scale } => shape * scale * scale,
            Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            BetaShiftScale { alpha, beta, scale, .. } => {
                let s = alpha + beta;
                scale * scale * alpha * beta / (s * s * (s + 1.0))
            }
            ScaledBernoulli { success_prob, value } => {
                value * value * success_prob * (1.0 - success_prob)
            }
            Deterministic { .. } => 0.0,
        }
    }

    /// Builds a reusable sampler after validating the parameters.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        use DistributionSpec as D;
        let inner = match *self {
            D::Exponential { rate } => Inner::Exp(Exp::new(rate).map_err(|e| Error::config("rate", e.to_string()))?),
            D::Gamma { shape, scale } => Inner::Gamma(
                Gamma::new(shape, scale).map_err(|e| Error::config("gamma", e.to_string()))?,
            ),
            D::Uniform { lo, hi } => Inner::Uniform { lo, width: hi - lo },
            D::BetaShiftScale { alpha, beta, shift, scale } => Inner::Beta {
                x: Gamma::new(alpha, 1.0).map_err(|e| Error::config("alpha", e.to_string()))?,
                y: Gamma::new(beta, 1.0).map_err(|e| Error::config("beta", e.to_string()))?,
                shift,
                scale,
            },
            D::ScaledBernoulli { success_prob, value } => Inner::Bernoulli { success_prob, value },
            D::Deterministic { value } => Inner::Point(value),
        };
        Ok(Sampler { inner, mean: self.mean() })
    }
}

/// One variate from `spec`. Prefer [`DistributionSpec::sampler`] in loops.
pub fn sample<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.sampler()?.sample(rng))
}

#[derive(Debug, Clone)]
enum Inner {
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Uniform { lo: f64, width: f64 },
    Beta { x: Gamma<f64>, y: Gamma<f64>, shift: f64, scale: f64 },
    Bernoulli { success_prob: f64, value: f64 },
    Point(f64),
}

/// A validated distribution ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    inner: Inner,
    mean: f64,
}

impl Sampler {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Exp(d) => d.sample(rng),
            Inner::Gamma(d) => d.sample(rng),
            Inner::Uniform { lo, width } => lo + width * rng.random::<f64>(),
            Inner::Beta { x, y, shift, scale } => {
                let a = x.sample(rng);
                let b = y.sample(rng);
                // Both gammas can underflow for tiny shapes; split the mass evenly then.
                let ratio = if a + b > 0.0 { a / (a + b) } else { 0.5 };
                shift + scale * ratio
            }
            Inner::Bernoulli { success_prob, value } => {
                if rng.random::<f64>() < *success_prob {
                    *value
                } else {
                    0.0
                }
            }
            Inner::Point(v) => *v,
        }
    }
}
