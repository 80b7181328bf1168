//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported cut: {interior} interior and {vertex} vertex intersections in one patch")]
    UnsupportedCut { interior: usize, vertex: usize },
    #[error("subdivision produced a zero-area cell")]
    DegenerateCell,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix is singular or numerically rank-deficient")]
    SingularMatrix,
    #[error("dimension mismatch: matrix is {n}x{n}, rhs has length {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
    #[error("residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("spaces are built on different meshes")]
    MeshMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
