use thiserror::Error;

/// Errors raised by the pricing engine and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chaos order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("basis needs at least one increment and one dimension (n = {increments}, d = {dims})")]
    EmptyBasis { increments: usize, dims: usize },

    #[error("basis cardinality {cardinality} exceeds the budget of {budget} indices")]
    BasisBudgetExceeded { cardinality: u128, budget: usize },

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("cutoff increment {cutoff} is beyond the catalog's {increments} increments")]
    CutoffOutOfRange { cutoff: usize, increments: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("correlation {rho} is outside the admissible range ({lower}, 1] for {assets} assets")]
    CorrelationOutOfRange { rho: f64, lower: f64, assets: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("payoff has no exercisable date: {0}")]
    NoExercisableDate(String),

    #[error("worker count {workers} is not in 1..={paths}")]
    InvalidWorkerCount { workers: usize, paths: usize },

    #[error("worker count {workers} exceeds the {leaves} summation leaves")]
    TooManyWorkers { workers: usize, leaves: usize },

    #[error("summation leaf count {0} must be a nonzero power of two")]
    InvalidLeafCount(usize),

    #[error("regression matrix is singular at exercise date {date} even after jitter")]
    SingularRegression { date: usize },

    #[error("worker pool failure: {0}")]
    Worker(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
