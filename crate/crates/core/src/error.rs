//! Error type shared by every module of the crate.

use thiserror::Error;

/// Unified error type for construction, validation and propagation failures.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A function argument violated its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration struct failed validation; the message names the field.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Two objects that must share a dimension did not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The integrator produced a non-finite or non-physical state.
    #[error("propagation failed at t = {time} ns: {reason}")]
    PropagationFailure { time: f64, reason: String },

    /// A fitness evaluation inside the genetic algorithm failed.
    #[error("evaluation of generation {generation}, member {member} failed: {source}")]
    EvaluationFailure {
        generation: usize,
        member: usize,
        #[source]
        source: Box<CoreError>,
    },

    /// An operation was called on an object in the wrong state.
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        CoreError::InvalidConfig(msg.into())
    }
}
