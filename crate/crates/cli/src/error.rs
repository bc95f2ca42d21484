//! Command-line error type and its exit-code mapping.

use thiserror::Error;

/// Exit code for a run where statistical tests failed.
pub const EXIT_TESTS_FAILED: u8 = 1;
/// Exit code for configuration or usage problems.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for numerical failures during computation.
pub const EXIT_NUMERICAL: u8 = 3;

/// Anything that can abort a command.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration, query, or command line is unusable.
    #[error("configuration error: {0}")]
    Config(String),
    /// A computation failed numerically.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The environment failed (filesystem, serialization of outputs).
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Exit code this error should terminate the process with.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> CliError {
        CliError::Config(msg.into())
    }
}

impl From<superext::Error> for CliError {
    fn from(e: superext::Error) -> CliError {
        match e {
            superext::Error::Numerical(msg) => CliError::Numerical(msg),
            superext::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Config(format!("invalid JSON: {e}"))
    }
}

/// Convenience alias for command results.
pub type Result<T> = std::result::Result<T, CliError>;
