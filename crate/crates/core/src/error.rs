use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("coincident points: {0}")]
    Coincident(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("regularized system is rank deficient (pivot {pivot} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("DoA weights undefined: primary field has no energy on the array")]
    ZeroField,

    #[error("desired field is identically zero")]
    ZeroReference,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
