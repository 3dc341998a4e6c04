use thiserror::Error;

/// Errors raised by the operator algebra, the estimators and the registry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative entry {value} at {location}")]
    NegativeEntry { location: String, value: f64 },

    #[error("empty operand list")]
    Empty,

    #[error("closure overflow: {0}")]
    ClosureOverflow(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("hypothesis violated for {chain}: {reason}")]
    Hypothesis { chain: String, reason: String },

    #[error("unknown chain id {0:?}")]
    UnknownChain(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
