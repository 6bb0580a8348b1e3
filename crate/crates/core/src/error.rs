use thiserror::Error;

/// Errors raised across the pricing, calibration and I/O layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SabrError {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A formula would evaluate a function outside its numeric domain
    /// (log of a non-positive number, division by zero).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Time-dependent parameters leave their admissible range.
    #[error("infeasible parameters: {what} at t = {times:?}")]
    Constraint { what: String, times: Vec<f64> },

    /// A simulated path produced a non-finite or non-positive state.
    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input that breaks an invariant (ordering, emptiness).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SabrError>;

impl From<std::io::Error> for SabrError {
    fn from(err: std::io::Error) -> Self {
        SabrError::Io(err.to_string())
    }
}

pub(crate) fn ensure_positive(value: f64, name: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SabrError::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

pub(crate) fn ensure_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SabrError::Domain(format!(
            "{name} must be finite, got {value}"
        )))
    }
}
