use std::path::PathBuf;

/// Errors raised by objectives, integrators and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("atoms {i} and {j} coincide (distance {distance:e})")]
    Singularity { i: usize, j: usize, distance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objective has no known minimizer")]
    MissingMinimizer,

    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),

    #[error("linear solve failed in implicit C step (condition number {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
