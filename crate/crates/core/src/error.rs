//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A requested grid would exceed the configured site cap.
    #[error("grid has {sites} sites, exceeding the cap of {cap}")]
    GridTooLarge { sites: usize, cap: usize },
    /// A numerical routine could not produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Underlying I/O failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// Malformed JSON while reading or writing artifacts.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
