use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instance index {index} out of range for universe of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("prediction {0} is outside [0, 1]")]
    PredictionOutOfRange(f64),

    #[error("label {0} is not binary")]
    InvalidLabel(u8),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid audit outcome: {0}")]
    InvalidAudit(String),

    #[error("invalid hypothesis class: {0}")]
    InvalidClass(String),

    #[error("hypothesis {duplicate} duplicates hypothesis {original}")]
    DuplicateHypothesis { original: usize, duplicate: usize },

    #[error("hypothesis class has no constant-zero hypothesis")]
    MissingConstantZero,

    #[error("invalid similarity table: {0}")]
    InvalidSimilarity(String),

    #[error("matrix is not symmetric positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("environment exhausted after {0} rounds")]
    EnvironmentExhausted(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field, reason: reason.into() }
    }
}
