use crate::avoidance::AvoidanceSet;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    /// An exact search ran out of its node budget. The best valid witness
    /// found so far is attached so callers can still use it (uncertified).
    #[error("search budget exhausted after {nodes} node expansions (best size so far: {})", best.members.len())]
    BudgetExhausted { nodes: u64, best: AvoidanceSet },

    #[error("instance size {actual} exceeds cap {cap}")]
    CapExceeded { actual: u128, cap: u128 },

    #[error("iteration cap {cap} exceeded")]
    IterationCapExceeded { cap: u64 },

    #[error("LP solver failed: {message} (residual {residual:.3e})")]
    SolverFailure { message: String, residual: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
