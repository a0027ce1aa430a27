//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("linear solver did not converge in stage '{stage}' (relative residual {residual:.3e} after {iterations} iterations)")]
    SolverNonConvergence {
        stage: String,
        residual: f64,
        iterations: usize,
    },

    #[error("boundary traces violate the temperature boundary values: {0}")]
    BoundaryTrace(String),

    #[error("velocity extension error: {0}")]
    Extension(String),

    #[error("fixed-point stage τ={tau} did not converge: residual {residual:.3e} after {iterations} iterations")]
    StageNonConvergence {
        tau: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("thinness condition violated (lhs = {lhs:.6e} ≥ 1); pass force=true to override")]
    ConditionViolated { lhs: f64 },

    #[error("left plateau not detected (a too small): variation {variation:.3e} over the leftmost window")]
    PlateauNotDetected { variation: f64 },

    #[error("state invariant violated: {0}")]
    StateInvariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed dump file: {0}")]
    Dump(String),
}
