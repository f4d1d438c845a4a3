use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid discriminant {value}: {reason}")]
    InvalidDiscriminant { value: String, reason: &'static str },

    #[error("invalid form: {0}")]
    InvalidForm(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("discriminant mismatch: {0} vs {1}")]
    DiscriminantMismatch(String, String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("cap exceeded: {what} exceeds cap {cap}")]
    CapExceeded { what: String, cap: u64 },

    #[error("precondition unmet: {0}")]
    Precondition(String),

    #[error("refinement diverged: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
