use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("signed Bernoulli mean {0} is outside [-1, 1]")]
    InvalidMean(f64),
    #[error("not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("inadmissible series: {0}")]
    Inadmissible(String),
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),
    #[error("degree p = 0 has no smooth tuning; use the sign tuning")]
    UseSignTuning,
    #[error("query budget must be at least 1")]
    ZeroBudget,
    #[error("epoch schedule is empty")]
    EmptySchedule,
    #[error("query counter overflow")]
    CounterOverflow,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and positive, got {value}")))
    }
}
