use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design: {0}")]
    InvalidSpec(String),

    #[error("correlation matrix is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("dimension {0} exceeds the supported maximum of {1}")]
    DimensionTooLarge(usize, usize),

    #[error("integration budget exhausted: estimate {estimate} with error {error} above target {target}")]
    BudgetExhausted {
        estimate: f64,
        error: f64,
        target: f64,
    },

    #[error("failed to bracket a root: {0}")]
    BracketFailure(String),

    #[error("search did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, DesignError>;
