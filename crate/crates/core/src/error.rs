use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),

    #[error("invalid depth {0}; depth must be positive")]
    InvalidDepth(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate ray: voxel coincides with the sensor origin")]
    DegenerateRay,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("timestamps not strictly increasing at line {line}")]
    Order { line: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("mesh has no vertices")]
    EmptyMesh,

    #[error("probe voxel was never observed")]
    ProbeUnobserved,

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit status: 2 for configuration, 4 for broken invariants,
    /// 3 for everything data-related.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Invariant(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
