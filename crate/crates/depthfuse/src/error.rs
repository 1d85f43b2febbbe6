use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or configuration value.
    #[error("configuration: {0}")]
    Config(String),

    /// Input data violates a precondition (empty maps, mismatched grids, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The sensor noise model is unusable at the requested depth.
    #[error("sensor model: {0}")]
    Model(String),

    /// A geometric operation left its domain (degenerate rotation, ...).
    #[error("geometry: {0}")]
    Domain(String),

    /// ICP matched too few points to trust the alignment.
    #[error("registration failed: matched fraction {matched:.4} below {min:.4}")]
    RegistrationFailed { matched: f64, min: f64 },

    /// A file did not conform to its format. `detail` names the offending
    /// line or byte offset.
    #[error("format error in {}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },

    /// Underlying I/O failure.
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for CLI front ends: 1 for bad input, 2 for runtime
    /// failures such as write errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
