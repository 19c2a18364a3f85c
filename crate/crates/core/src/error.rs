use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the embedding pipeline.
#[derive(Debug, Error)]
pub enum HneError {
    #[error("neighborhood size k = {k} is too large for n = {n} points (need 1 <= k <= n - 1)")]
    KTooLarge { k: usize, n: usize },

    #[error("target dimension d = {d} must satisfy 1 <= d < D = {dim} and d < n = {n}")]
    DTooLarge { d: usize, dim: usize, n: usize },

    #[error("input contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("local Gram system is numerically singular{}", point.map(|p| format!(" at point {p}")).unwrap_or_default())]
    SingularSystem { point: Option<usize> },

    #[error("iterative eigensolver did not converge after {iterations} restarts")]
    ConvergenceFailure { iterations: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent dimensions in {path}: {detail}")]
    InconsistentDimensions { path: PathBuf, detail: String },

    #[error("failed to parse {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HneError {
    pub(crate) fn at_point(self, i: usize) -> Self {
        match self {
            HneError::SingularSystem { point: None } => HneError::SingularSystem { point: Some(i) },
            other => other,
        }
    }
}

pub type Result<T, E = HneError> = std::result::Result<T, E>;
