//! Experiment runners behind the `lyapunov` binary.

pub mod checks;
pub mod commands;
pub mod config;

use thiserror::Error;

pub use checks::{run_checks, CheckOutcome, CheckReport, Fault};
pub use commands::{cmd_equiv, cmd_frames, cmd_galapon, cmd_trace, Report};
pub use config::{Experiment, GridSpacing, Resolved, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input; exit code 2.
    #[error("{0}")]
    Config(String),
    /// A computed invariant did not hold; exit code 1.
    #[error("invariant failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Compute(#[from] lyapunov_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<config::FieldError> for CliError {
    fn from(e: config::FieldError) -> Self {
        CliError::Config(e.to_string())
    }
}
