use thiserror::Error;

use crate::spectral::Representation;

/// Errors raised by the numerical library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("field is in {found:?} representation, operation requires {expected}")]
    Representation {
        found: Representation,
        expected: &'static str,
    },

    #[error("profile transform does not decay: |F(s eta)| e^(-gamma s) still {residual:e} at s = {s_cap}")]
    TruncationFailure { s_cap: f64, residual: f64 },

    #[error("quadrature did not converge: estimated error {error:e} after {panels} panels")]
    Quadrature { error: f64, panels: usize },

    #[error("non-finite value detected at t = {t}: {what}")]
    NonFinite { t: f64, what: String },

    #[error("spectral differentiation under-resolved: high-mode energy fraction {fraction:e}")]
    Underresolved { fraction: f64 },

    #[error("characteristic window too large: |grad_z Z - I| = {jacobian_deviation} ({detail})")]
    WindowTooLarge {
        jacobian_deviation: f64,
        detail: String,
    },

    #[error("time {t} outside the Hamiltonian history [{start}, {end}]")]
    HistoryRange { t: f64, start: f64, end: f64 },

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param_err(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
