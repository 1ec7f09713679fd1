use std::path::PathBuf;

/// Errors raised by the analysis pipelines and file handling.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Two images (or an image and a mask) that must share a shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An analysis parameter, range or region is invalid.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Sample data cannot be processed (non-finite values, out-of-range samples).
    #[error("invalid data: {0}")]
    Data(String),

    /// A file or buffer is not in a supported format.
    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from caller-supplied configuration rather than
    /// from the content of input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Parameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
