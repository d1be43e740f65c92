use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// At least one sweep run failed; the others were still written.
    pub const SWEEP_FAILURES: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INSTABILITY: u8 = 3;
    pub const IO: u8 = 4;
    /// Verification ran but the gap bound exceeds the target.
    pub const NOT_CERTIFIED: u8 = 5;
    pub const DOMAIN: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Instability(String),

    #[error("{0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Output(String),

    #[error("strategy is not certified: epsilon_hi {epsilon_hi} > target {target}")]
    NotCertified { epsilon_hi: f64, target: f64 },

    #[error("{failed} of {total} sweep runs failed")]
    SweepFailures { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn config_field(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{field}: {reason}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Instability(_) => exit::INSTABILITY,
            CliError::Domain(_) => exit::DOMAIN,
            CliError::Io { .. } | CliError::Output(_) => exit::IO,
            CliError::NotCertified { .. } => exit::NOT_CERTIFIED,
            CliError::SweepFailures { .. } => exit::SWEEP_FAILURES,
        }
    }
}

impl From<qgame::Error> for CliError {
    fn from(e: qgame::Error) -> Self {
        match e {
            qgame::Error::Config { field, reason } => CliError::config_field(&field, reason),
            qgame::Error::InvalidInput(m) => CliError::Config(m),
            qgame::Error::Instability(m) => CliError::Instability(format!("instability: {m}")),
            qgame::Error::Domain(m) => CliError::Domain(format!("outside oracle domain: {m}")),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
