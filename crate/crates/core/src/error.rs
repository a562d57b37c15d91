use thiserror::Error;

/// Errors raised by the numeric library (everything below the runner).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("atom index {index} out of range for {n_atoms} atom(s)")]
    AtomIndexOutOfRange { index: usize, n_atoms: usize },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("integrator did not reach tolerance {tol:.1e} near t = {time} (drift {drift:.3e})")]
    ToleranceNotMet { tol: f64, time: f64, drift: f64 },

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("gate is not diagonal-dominant (leakage + off-diagonal = {0:.3e})")]
    NotDiagonalDominant(f64),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
