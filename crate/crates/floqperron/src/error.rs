use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural or numerical precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Time integration produced a non-finite value or lost positivity.
    #[error("integration failed at step {step} (t = {time}): {reason}")]
    IntegrationFailure {
        step: usize,
        time: f64,
        reason: String,
    },

    /// A model does not satisfy the standing assumptions of the cell-cycle
    /// system (boundedness, transition-survival product above 1/2).
    #[error("model assumptions not satisfied: {0}")]
    AssumptionFailed(String),

    /// The model admits no meaningful growth rate (e.g. total mass vanished).
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// A scalar root solve could not bracket its root.
    #[error("root bracketing failed: {0}")]
    BracketFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
