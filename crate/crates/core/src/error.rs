use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SrprError>;

#[derive(Debug, Error)]
pub enum SrprError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("instance has no ground-truth signal")]
    MissingGroundTruth,

    #[error("ground-truth signal has zero norm")]
    ZeroGroundTruth,

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.1e}")]
    QuadratureInaccurate { estimate: f64, tolerance: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SrprError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SrprError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SrprError::DimensionMismatch { expected, got })
    }
}
