use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdqError {
    #[error("invalid gram matrix: {0}")]
    InvalidGram(String),
    #[error("structure error: {0}")]
    StructureError(String),
    #[error("multiplier is not unitary: {0}")]
    NotUnitary(String),
    #[error("map is not an isomorphism: {0}")]
    NotIsomorphism(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("truncation error: {0}")]
    TruncationError(String),
    #[error("symbol is not square integrable: {0}")]
    NotSquareIntegrable(String),
    #[error("quadrature error: {0}")]
    QuadratureError(String),
    #[error("resource limit exceeded: {0}")]
    ResourceError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HdqError>;
