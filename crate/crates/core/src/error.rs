use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("label `{0}` is empty after normalization")]
    Normalization(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("terrain generation failed after {attempts} attempts (last walkable fraction {last_walkable_fraction:.3})")]
    Generation {
        attempts: u32,
        last_walkable_fraction: f64,
    },

    #[error("placement failed: {0}")]
    Placement(String),

    #[error("missing assets for tile ids: {0:?}")]
    MissingAssets(Vec<String>),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for failures of the domain algorithms themselves, as opposed to
    /// bad input or I/O.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Generation { .. } | Error::Placement(_) | Error::Diverged(_)
        )
    }
}
