use thiserror::Error;

use crate::model::RatePair;

pub type Result<T> = std::result::Result<T, CoopError>;

/// Rate-region axis, used when reporting an unbounded constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    R1,
    R2,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::R1 => write!(f, "R1"),
            Axis::R2 => write!(f, "R2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CoopError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region is unbounded along {0}")]
    Unbounded(Axis),

    #[error("inner region not nested in outer region: vertex ({:.6}, {:.6}) exceeds a constraint by {excess:.3e} bits", .vertex.r1, .vertex.r2)]
    NotNested { vertex: RatePair, excess: f64 },

    #[error("gap violation on {channel}: {gap:.9} bits > {bound} bits at mu = {mu:.6}")]
    GapViolation {
        channel: String,
        gap: f64,
        bound: f64,
        mu: f64,
    },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("slot {slot}: stream {stream} decoded incorrectly")]
    DecodeMismatch { slot: usize, stream: &'static str },

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CoopError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CoopError::InvalidParameter(msg.into())
    }
}
