use std::path::PathBuf;

/// Errors raised by discretization, assembly and solver routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator tagged {tag} violates its symmetry at ({row}, {col})")]
    SymmetryViolation {
        tag: &'static str,
        row: usize,
        col: usize,
    },

    #[error("singular matrix: pivot {pivot:e} in column {column} below threshold {threshold:e}")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("inadmissible state at node {node}: {state:?}")]
    Inadmissible { node: usize, state: Vec<f64> },

    #[error("entropy projection produced an inadmissible state at point {point}: {state:?}")]
    InadmissibleProjection { point: usize, state: Vec<f64> },

    #[error("logarithmic mean requires positive arguments, got ({0}, {1})")]
    LogMeanDomain(f64, f64),

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-periodic discretization requires a boundary policy")]
    MissingBoundaryPolicy,

    #[error("quadrature with {points} points cannot integrate degree {degree} exactly")]
    InsufficientQuadrature { points: usize, degree: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("newton iteration did not converge after {iterations} iterations (last update {last_update:e}); history {history:?}")]
    NewtonFailure {
        iterations: usize,
        last_update: f64,
        history: Vec<f64>,
    },

    #[error("invalid time integrator setting: {0}")]
    InvalidIntegrator(String),

    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed matrix market data: {0}")]
    MatrixMarket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
