use thiserror::Error;

use crate::cone_metric::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("point {0} is outside the domain")]
    OutsideDomain(Point),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("denominator vanishes at {0}")]
    PoleHit(f64),

    #[error("no T-preimage of {0} inside the domain")]
    NoPreimage(Point),

    #[error("incompatible maps: {0}")]
    Incompatible(String),

    /// A parameter constraint of a contraction condition was violated.
    #[error("{0}")]
    Constraint(String),

    #[error("sequence too short: need at least {need} terms, got {got}")]
    SequenceTooShort { need: usize, got: usize },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
