use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    ConfigParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("malformed header in {path}: {msg}")]
    MalformedHeader { path: PathBuf, msg: String },

    #[error("truncated payload in {path}: expected {expected} values, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("dimension overflow in {path}: {rows} x {cols}")]
    DimensionOverflow { path: PathBuf, rows: u64, cols: u64 },

    #[error("{path}:{line}: {msg}")]
    CsvParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty chain: no samples were kept")]
    EmptyChain,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable numeric code for each failure class.
    pub fn code(&self) -> u32 {
        match self {
            Error::Domain(_) => 10,
            Error::Dimension(_) => 11,
            Error::Config(_) => 20,
            Error::ConfigParse { .. } => 21,
            Error::MalformedHeader { .. } => 30,
            Error::TruncatedPayload { .. } => 31,
            Error::DimensionOverflow { .. } => 32,
            Error::CsvParse { .. } => 33,
            Error::Numerical(_) => 40,
            Error::EmptyChain => 41,
            Error::Io { .. } => 50,
        }
    }

    /// True when the failure comes from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::EmptyChain)
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
