use thiserror::Error;

pub type Result<T, E = DesignError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("information matrix is numerically singular")]
    SingularInformation,

    #[error("every weight is at or below the pruning tolerance {tol}")]
    EmptySupport { tol: f64 },

    #[error("solver did not converge after {iterations} iterations (certificate {certificate:.3e})")]
    NotConverged { iterations: usize, certificate: f64 },

    #[error("anchor for criterion {criterion} failed its optimality certificate ({value:.3e} > {tol:.1e})")]
    AnchorUnverified {
        criterion: String,
        value: f64,
        tol: f64,
    },

    #[error("maximin certificate is infeasible at the requested slack")]
    Infeasible,

    #[error("budget {budget} cannot buy a single unit at any support point")]
    BudgetTooSmall { budget: f64 },

    #[error("sample size {n} is smaller than the support size {support}")]
    SampleTooSmall { n: u64, support: usize },

    #[error("allocation enumeration exceeded the cap of {cap} candidates")]
    EnumerationCapExceeded { cap: usize },
}

impl DesignError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DesignError::InvalidParameter(msg.into())
    }
}
