use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-monotone radii at line {0}")]
    NonMonotoneRadii(usize),

    #[error("radius {r} outside [{lo}, {hi}]")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("mesh is not watertight: edge {0}-{1} has no opposite half-edge")]
    NotWatertight(usize, usize),

    #[error("mesh orientation is inconsistent: signed volume {0:e} is not positive")]
    Orientation(f64),

    #[error("non-finite geometry for sample {0}")]
    NonFinite(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("missing stage `{stage}`: {detail}")]
    MissingStage { stage: String, detail: String },

    #[error("hash mismatch for {path}: manifest has {expected}, file has {actual}")]
    HashMismatch { path: PathBuf, expected: String, actual: String },

    #[error("refusing to overwrite {0} (pass --force)")]
    WouldOverwrite(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
