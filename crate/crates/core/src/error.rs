use thiserror::Error;

/// Everything that can go wrong while building coefficients or solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HillError {
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("step size underflow at x = {x} (lambda = {lambda})")]
    StepUnderflow { x: f64, lambda: f64 },

    /// The edge scan hit its cap before finding the requested gaps.
    /// `found` holds the edges located so far, in increasing order.
    #[error("band-edge scan reached lambda = {lambda_max} after {gaps_found} of {gaps_requested} gaps")]
    ScanExhausted {
        lambda_max: f64,
        gaps_found: usize,
        gaps_requested: usize,
        found: Vec<f64>,
    },

    #[error("lambda = {lambda} is not inside a band; it lies in {location}")]
    NotInBand { lambda: f64, location: String },

    #[error("lambda = {lambda} is not in a gap; it lies inside {location}")]
    NotInGap { lambda: f64, location: String },

    #[error("root not bracketed on [{lo}, {hi}]: {what}")]
    NotBracketed { lo: f64, hi: f64, what: String },

    #[error("gap {gap} at tau = {tau}: {reason}")]
    GapRootAnomaly { gap: usize, tau: f64, reason: String },

    #[error("edge eigenfunction: |D - ({target})| = {residual:e} at lambda = {lambda}; edge data is stale")]
    StaleEdge {
        lambda: f64,
        target: f64,
        residual: f64,
    },

    #[error("eigenfunction endpoint residual {residual:e} exceeds {tolerance:e}; eigenvalue is stale, recompute it")]
    EndpointResidual { residual: f64, tolerance: f64 },

    #[error("numerical anomaly: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, HillError>;

pub(crate) fn invalid_arg(field: &'static str, reason: impl Into<String>) -> HillError {
    HillError::InvalidArgument {
        field,
        reason: reason.into(),
    }
}
