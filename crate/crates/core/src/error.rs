use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the labeling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Schema or content violation in an input file. `location` is a JSON
    /// pointer for manifests and `line N` for JSON-lines files.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("mask error: {0}")]
    Mask(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("convex hull is degenerate (fewer than 3 points or all collinear)")]
    DegenerateHull,

    #[error("point spread is degenerate (zero covariance)")]
    DegenerateSpread,

    #[error("aggregate for track {0} is empty")]
    EmptyAggregate(String),

    #[error("every point was labeled noise")]
    NoCluster,
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than internal faults.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Io { .. } | Error::Mask(_) | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
