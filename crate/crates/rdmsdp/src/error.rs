use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("eigensolver failed to converge on block {block} (dimension {dim})")]
    EigFailure { block: usize, dim: usize },

    #[error("FCI sector too large: C({d},{n}) = {size} determinants exceeds the cap")]
    SectorTooLarge { d: usize, n: usize, size: u128 },

    #[error("solver called before enough iterations: {0}")]
    NotReady(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
