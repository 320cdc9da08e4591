use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A constructor or operation received an argument outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A vector length does not match the grid it is paired with.
    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A linear solve did not reach its residual tolerance.
    #[error("linear solve failed: {message} (condition estimate {condition_estimate:.3e})")]
    Numeric {
        message: String,
        condition_estimate: f64,
    },

    /// The inner fixed-point iteration ran out of its iteration budget.
    #[error(
        "inner iteration did not converge: last gap {bracket_gap:.3e} after {iters} iterations"
    )]
    InnerNonConvergence { bracket_gap: f64, iters: usize },

    /// The outer regularization loop exhausted its level schedule.
    #[error("level schedule exhausted without meeting the Cauchy tolerance; trace {trace:?}")]
    OuterNonConvergence { trace: Vec<f64> },

    /// A refinement schedule violates its resolvability constraints.
    #[error("invalid schedule: {0}")]
    Schedule(String),

    /// The Monte Carlo module was asked to handle a measure it does not support.
    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),

    /// A Monte Carlo estimate was invalidated (too many walks timed out).
    #[error("invalid estimate: timeout fraction {timeout_fraction:.3e} exceeds 1%")]
    InvalidEstimate { timeout_fraction: f64 },
}

impl CoreError {
    pub fn parameter(msg: impl Into<String>) -> Self {
        CoreError::Parameter(msg.into())
    }
}
