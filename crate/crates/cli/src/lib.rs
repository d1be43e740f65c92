//! Command-line driver: TOML experiment configs in, trajectory CSVs and
//! JSON summaries out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{exit, CliError};
