use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    /// A user-supplied generator left the admissible class.
    #[error("generator membership violation: {0}")]
    MembershipViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Two independent computations that must agree did not.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("linear program failure: {0}")]
    Lp(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("solver diverged: {0}")]
    Divergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
