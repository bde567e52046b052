use thiserror::Error;

/// Errors raised by builders, propagators and scans.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VaetError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("hamiltonian dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("propagator construction failed: eigen-decomposition residual {residual:e}")]
    Eigensolver { residual: f64 },

    #[error("time grid is invalid: {0}")]
    TimeGrid(String),

    #[error("runge-kutta integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("scan point (nu_a = {nu_a}, nu_b = {nu_b}) failed: {source}")]
    ScanPoint {
        nu_a: f64,
        nu_b: f64,
        #[source]
        source: Box<VaetError>,
    },

    #[error("perturbation theory requires a symmetric trimer: {0}")]
    NotSymmetric(String),

    #[error("invalid interaction pathway: {0}")]
    Pathway(String),
}

pub type Result<T> = std::result::Result<T, VaetError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> VaetError {
    VaetError::InvalidParameter { field, reason: reason.into() }
}
