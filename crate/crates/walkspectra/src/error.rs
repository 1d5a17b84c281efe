use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator failed the unitarity check: max residual {max_residual:.3e} > tol {tol:.3e}")]
    NotUnitary { max_residual: f64, tol: f64 },
    #[error("eigenvalue gap violated at grid point {point_index}: gap {gap:.3e} ≤ {required:.3e} (near a band collision)")]
    GapViolation {
        point_index: usize,
        gap: f64,
        required: f64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
