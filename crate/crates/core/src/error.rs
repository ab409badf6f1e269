use thiserror::Error;

/// Errors raised by the inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GfiError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("iteration cap of {cap} exceeded while {context}")]
    IterationCap { cap: usize, context: String },

    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },

    #[error("parameter is not identifiable: {0}")]
    Unidentifiable(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, GfiError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GfiError::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(GfiError::Config(msg.into()))
}
