//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration, input validation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set that can never describe a valid experiment
    /// (zero slots, more bursts than slots, malformed distribution, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Structurally valid configuration applied to inconsistent data
    /// (duplicate users, length mismatches, out-of-range probabilities).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An API contract was violated by the caller (e.g. cancelling a user
    /// that was never decoded).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// File parse failures for registries, tables and configs.
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    /// Underlying I/O failure; the offending path is kept in the message.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
