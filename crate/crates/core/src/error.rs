use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid language: {0}")]
    InvalidLanguage(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("language mismatch: {0}")]
    LanguageMismatch(String),
    #[error("vertex set mismatch: {0}")]
    VertexMismatch(String),
    #[error("not an injection: {0}")]
    NotInjective(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("descriptor mismatch: {0}")]
    DescriptorMismatch(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("unknown gallery entry `{0}`")]
    UnknownTheon(String),
    #[error("not a chamber-grid theon: {0}")]
    NotChamberGrid(String),
    #[error("not independent: {0}")]
    NotIndependent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
