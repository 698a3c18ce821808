//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid raypath: {0}")]
    InvalidRaypath(String),

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("invalid smoothing plan: {0}")]
    InvalidPlan(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no realizations supplied")]
    EmptyRealizations,

    #[error("realization {index} has length {got}, expected {expected}")]
    RealizationLength {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("matrix is not Hermitian: relative residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error(
        "signal subspace dimension {signal_dim} (path count P = {paths}) must be \
         smaller than the matrix dimension {dim}"
    )]
    SignalSubspaceTooLarge {
        signal_dim: usize,
        paths: usize,
        dim: usize,
    },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("cube file {path}, byte {offset}: {message}")]
    CubeFormat {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("grid file {path}, line {line}: {message}")]
    GridFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category; the CLI maps these to exit codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_)
            | Error::InvalidRaypath(_)
            | Error::InvalidNoise(_)
            | Error::InvalidPlan(_)
            | Error::InvalidGrid(_)
            | Error::DimensionMismatch(_) => "validation",
            Error::EmptyRealizations
            | Error::RealizationLength { .. }
            | Error::NotHermitian { .. }
            | Error::SignalSubspaceTooLarge { .. }
            | Error::Eigen(_) => "estimator",
            Error::Config { .. } => "config",
            Error::CubeFormat { .. } | Error::GridFormat { .. } => "format",
            Error::Io { .. } => "io",
        }
    }
}
