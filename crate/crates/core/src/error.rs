use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {found} (expected {expected})")]
    UnsupportedDimension { found: usize, expected: &'static str },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("domain error at line {line}: coordinate {value} outside [0,1]")]
    Domain { line: u64, value: f64 },

    #[error("coordinate {0} leaves the unit cube")]
    OutOfUnitCube(f64),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("incomplete solution: variable `{0}` has no value")]
    IncompleteSolution(String),

    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Lp(#[from] crate::search::lp::LpError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
