use thiserror::Error;

/// Errors surfaced by the solver library.
///
/// Non-convergence is *not* an error: outer and inner solves report it
/// through their status enums. `QlpError` covers contract violations
/// (parameters outside their domain), non-finite oracle output, and
/// failed problem construction.
#[derive(Debug, Error)]
pub enum QlpError {
    /// A parameter was outside its documented range.
    #[error("parameter `{name}` = {value} outside valid range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// An oracle or intermediate evaluation produced NaN/inf.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// A dimension did not match the oracle contract.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Random instance generation failed (e.g. rank-deficient draw after retries).
    #[error("problem construction failed: {0}")]
    Construction(String),

    /// A registry string or grid config could not be parsed.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, QlpError>;

pub(crate) fn check_domain(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(QlpError::Domain { name, value, range })
    }
}

pub(crate) fn ensure_finite(value: f64, context: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(QlpError::NonFinite { context })
    }
}
