//! Library surface of the command-line frontend.
//!
//! Split from the binary so integration tests can exercise config parsing,
//! bundle IO and the command implementations in-process.

pub mod bundle;
pub mod commands;
pub mod config_file;

use std::fmt;

/// Command-level failure carrying the process exit code contract:
/// 2 config error, 3 propagation failure, 4 corrupt bundle, 1 anything else.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Propagation(String),
    CorruptBundle(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Propagation(_) => 3,
            CliError::CorruptBundle(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn corrupt(msg: impl Into<String>) -> Self {
        CliError::CorruptBundle(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Propagation(m) => write!(f, "propagation failure: {m}"),
            CliError::CorruptBundle(m) => write!(f, "corrupt bundle: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pulsevo::CoreError> for CliError {
    fn from(e: pulsevo::CoreError) -> Self {
        use pulsevo::CoreError::*;
        match e {
            InvalidArgument(_) | InvalidConfig(_) | DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            PropagationFailure { .. } | EvaluationFailure { .. } => {
                CliError::Propagation(e.to_string())
            }
            InvalidState(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("io: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
