use thiserror::Error;

use crate::gram::FrameDiagnostics;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin label `{0}`: expected an integer or a half-integer like `3/2`")]
    InvalidSpin(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("vector ({0}, {1}, {2}) cannot be normalized")]
    ZeroVector(f64, f64, f64),

    #[error("vector has norm {norm}, outside the unit tolerance")]
    NotUnit { norm: f64 },

    #[error("index {index} out of range for {len} spikes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("constellations belong to different spins ({0} vs {1} doubled)")]
    SpinMismatch(u32, u32),

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Gram matrix is singular: min eigenvalue {:e} <= tau {:e}", .0.min_eigenvalue(), .0.tau)]
    SingularGram(Box<FrameDiagnostics>),

    #[error("repair failed: spike {index} could not be moved off the singular set after {attempts} attempts")]
    RepairFailed { index: usize, attempts: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
