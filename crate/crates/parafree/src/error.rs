use thiserror::Error;

/// Errors surfaced by learners, projections, and numeric routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A magnitude hint was non-positive or decreased between rounds.
    #[error("invalid hint: {0}")]
    InvalidHint(String),

    /// A caller broke an interaction contract (e.g. fed a gradient larger
    /// than the current hint, or supplied a regularization coefficient
    /// without a saturated gradient).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Vector dimensions disagreed.
    #[error("shape mismatch: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// The supplied regularizer is outside the supported family.
    #[error("unsupported regularizer: {0}")]
    UnsupportedRegularizer(String),

    /// An invalid configuration value.
    #[error("invalid config: {0}")]
    Config(String),

    /// A bound evaluator was invoked with the wrong step-size branch.
    #[error("branch mismatch: {0}")]
    BranchMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
