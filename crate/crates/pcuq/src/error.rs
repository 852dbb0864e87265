use thiserror::Error;

use crate::quadrature::RuleKind;

/// Errors raised by the quadrature, projection and surrogate routines.
#[derive(Debug, Error)]
pub enum UqError {
    #[error("level {level} is not available for the {kind:?} rule")]
    UnsupportedLevel { kind: RuleKind, level: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("point {0:?} lies outside the unit cube")]
    OutsideCube(Vec<f64>),
    #[error("expansions use different index sets")]
    IndexMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
