use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed numeric input (non-finite coordinate, wrong dimension, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model or run parameter is outside its admissible range.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// The queueing system is (or would be) unstable: a cycle hit the hard
    /// safety limit, or the parameters admit unstable strategies while no
    /// truncation is configured.
    #[error("instability: {0}")]
    Instability(String),

    /// A closed-form oracle was queried outside its validity range.
    #[error("outside oracle domain: {0}")]
    Domain(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
