use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpiError {
    /// A parameter lies outside its admissible domain.
    #[error("{name}: {reason}")]
    Domain { name: String, reason: String },

    /// Two inputs that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Integration left the admissible state range.
    #[error("integration became unstable at t = {t}: {detail}; try a smaller dt")]
    Unstable { t: f64, detail: String },
}

impl EpiError {
    pub fn domain(name: impl Into<String>, reason: impl Into<String>) -> Self {
        EpiError::Domain {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, EpiError>;

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(EpiError::domain(name, format!("{name} out of [0,1]: {value}")))
    }
}
