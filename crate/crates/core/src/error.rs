use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires the {expected} variant, model is {actual}")]
    WrongVariant {
        expected: &'static str,
        actual: String,
    },

    #[error(
        "{what} did not converge after {iterations} iterations (last change {last_change:.3e})"
    )]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("fixed-point iteration oscillates; retry with damping below {suggested_damping}")]
    Oscillating { suggested_damping: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("numerical blowup at t = {t}: {detail}")]
    NumericalBlowup { t: f64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("physical validity check failed: {0}")]
    Validity(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("refusing to overwrite {0} (pass --force)")]
    WouldOverwrite(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidGrid(_)
            | Error::Validity(_)
            | Error::WrongVariant { .. }
            | Error::Checkpoint(_)
            | Error::WouldOverwrite(_) => 1,
            _ => 2,
        }
    }
}
