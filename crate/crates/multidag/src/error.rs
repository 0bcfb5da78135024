//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad vertex index, dimension
    /// mismatch, missing table entries, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A request exceeds a hard capacity guard (enumeration blowup,
    /// brute-force budget, vertex limit).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Numerically degenerate state (non-positive predictive variance).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A file could not be parsed; `record` is 1-based.
    #[error("parse error in {path} (record {record}): {message}")]
    Parse {
        path: String,
        record: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// A state that a correct program never reaches (solver bug, tie
    /// explosion past the guard).
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
