use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mass mismatch: total masses {left} and {right} differ by more than {tolerance}")]
    MassMismatch { left: f64, right: f64, tolerance: f64 },

    #[error("instance too large: {0}")]
    SizeLimit(String),

    /// The preconditions of an analytic bound do not hold for the given parameters.
    #[error("inapplicable regime: {0}")]
    InapplicableRegime(String),

    #[error("scale out of range: {0}")]
    ScaleRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("degenerate function: the variance under the invariant measure is zero")]
    DegenerateFunction,

    #[error("value out of tabulated range: {0}")]
    Range(String),

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for the "bound does not apply" family of errors, which experiments
    /// record as missing values rather than failures.
    pub fn is_inapplicable(&self) -> bool {
        matches!(self, Error::InapplicableRegime(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
