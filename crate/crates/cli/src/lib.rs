//! Command-line front end for the `superext` library.
//!
//! The binary exposes four subcommands — `simulate`, `convergence`, `test`,
//! and `fdd` — all driven by a flat JSON configuration file plus a small set
//! of flag overrides. Everything it writes is a deterministic function of
//! the resolved configuration, so runs can be reproduced and diffed.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TESTS_FAILED};
