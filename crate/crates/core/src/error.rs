use thiserror::Error;

use crate::spec::ParseError;
use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("grid needs at least 8 nodes per axis, got {0}")]
    GridTooSmall(usize),
    #[error("mode truncation needs M >= 4, got {0}")]
    TruncationTooSmall(usize),
    #[error("inadmissible perturbation: {kind} function {index}: {detail}")]
    Inadmissible {
        kind: &'static str,
        index: usize,
        detail: String,
    },
    #[error("eigen decomposition failed in block starting at index {index}: {detail}")]
    EigenFailure { index: usize, detail: String },
    #[error("eigenpair {index} has residual {residual:e} above {tol:e}")]
    EigenResidual { index: usize, residual: f64, tol: f64 },
    #[error("unsupported representation: {0}")]
    Unsupported(String),
    #[error("family II matching system is singular for multiplier {multiplier}")]
    SingularMatch { multiplier: C64 },
    #[error("boundary matrix is rank deficient (rank {0})")]
    RankDeficient(usize),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
