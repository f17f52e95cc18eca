use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("integrator step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("inconsistent Bogoliubov pair: {0}")]
    Bogoliubov(String),

    #[error("no closed-form catalog entry for this spec ({0}); use the quadrature path")]
    NotInCatalog(String),

    #[error("unknown estimation parameter `{0}`")]
    UnknownParameter(String),

    #[error("Fock truncation insufficient: norm defect {defect:e}")]
    Truncation { defect: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
