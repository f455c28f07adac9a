use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("radial coordinate must be positive (got {0})")]
    Domain(f64),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("grid too short: {0}")]
    GridTooShort(String),
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
}

impl Error {
    /// True for errors caused by bad caller input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::InvalidBracket(_))
    }
}
