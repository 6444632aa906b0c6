//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input value is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The ODE right-hand side hit a vanishing denominator or density.
    #[error("singular ODE state at b = {b}: v1 = {v1}, v2 = {v2}: {detail}")]
    Singular { b: f64, v1: f64, v2: f64, detail: String },

    /// The binary-search bracket does not straddle the feasibility boundary.
    #[error("bad b* bracket: {0}")]
    Bracket(String),

    /// No feasible equilibrium trajectory was found.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The estimation input is unusable as a whole (per-row problems are
    /// reported separately and do not raise this).
    #[error("estimation input error: {0}")]
    EstimationInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::EstimationInput(msg.into())
    }

    /// True for failures of the numerical search itself, as opposed to bad
    /// inputs. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Bracket(_) | Error::Infeasible(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
