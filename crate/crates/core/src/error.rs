use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NlwError>;

#[derive(Debug, Error)]
pub enum NlwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {0} is not supported (expected 3, 4 or 5)")]
    UnsupportedDimension(u32),

    #[error("superluminal boost: |l| = {0} must be < 1")]
    Superluminal(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("non-finite sample at node {node} ({field})")]
    NonFinite { node: usize, field: &'static str },

    #[error("bubble at scale {scale} is unresolved: {points} grid points inside r <= scale, need {required}")]
    Unresolved {
        scale: f64,
        points: usize,
        required: usize,
    },

    #[error("boundary contamination: |t| = {t} exceeds window {window} (r_max {r_max}, support {support})")]
    BoundaryContamination {
        t: f64,
        window: f64,
        r_max: f64,
        support: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("solver aborted at t = {t}: {reason}")]
    SolverAbort { t: f64, reason: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("snapshot payload truncated: missing {missing} bytes")]
    Truncated { missing: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Experiment(String),
}

impl NlwError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NlwError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        NlwError::InvalidArgument(msg.into())
    }
}
