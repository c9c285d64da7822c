//! Error types shared across the crate, with CLI exit-code mapping.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameter outside its mathematical domain (e.g. non-positive ν).
    #[error("domain error: {0}")]
    Domain(String),

    /// Moments requested for a distribution that has none (ν ≤ 2).
    #[error("moments undefined for nu = {0} (requires nu > 2)")]
    MomentsUndefined(f64),

    /// Caller violated an API contract (dimension mismatch, wrong model kind).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid run configuration or schema violation.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed CSV input.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Numerical failure: singular matrix, non-finite intermediate, etc.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A verification oracle failed to converge.
    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    TrainingDivergence { epoch: usize, batch: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 config/validation, 3 numeric, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::MomentsUndefined(_)
            | Error::Contract(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Json(_) => 2,
            Error::Numeric(_) | Error::OracleFailure(_) | Error::TrainingDivergence { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
