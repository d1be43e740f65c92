//! Symmetric equilibria of queueing games by simulation and stochastic
//! approximation.
//!
//! A strategy `p` is a probability vector over a finite action set. The
//! solver repeatedly simulates one regeneration cycle of the queue under the
//! current strategy, sums the conditional utility of every action over the
//! arrivals of that cycle, and takes a projected step
//! `p <- proj_simplex(p + gamma_n * G)`. Fixed points of the averaged map are
//! exactly the symmetric Nash equilibria.
//!
//! Modules:
//! - [`simplex`]: projections onto the simplex and the zero-sum hyperplane
//! - [`distributions`]: inter-arrival and service distributions
//! - [`models`]: the [`GameModel`](models::GameModel) contract and built-in games
//! - [`estimator`]: cycle estimators and control variates
//! - [`sa_engine`]: the stochastic-approximation driver
//! - [`verify`]: epsilon-equilibrium certification and closed-form oracles

pub mod distributions;
pub mod error;
pub mod estimator;
pub mod models;
pub mod rng;
pub mod sa_engine;
pub mod simplex;
pub mod strategy;
pub mod verify;

pub use error::{Error, Result};
pub use simplex::SimplexPoint;
pub use strategy::BehavioralStrategy;
