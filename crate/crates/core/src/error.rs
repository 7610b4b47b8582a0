use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: no parseable price rows")]
    NoRows { path: PathBuf },

    #[error("{asset}: duplicate date {date}")]
    DuplicateDate { asset: String, date: chrono::NaiveDate },

    #[error("{asset}: no prices inside the date window")]
    NoOverlap { asset: String },

    #[error("insufficient data: need at least {required} {what}, got {actual}")]
    InsufficientData {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("dimension mismatch for {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid {name}: {value} (expected {expected})")]
    InvalidParameter {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),
}

/// Coarse failure category, used by the command line for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Solver,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => ErrorClass::Config,
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::NoRows { .. }
            | Error::DuplicateDate { .. }
            | Error::NoOverlap { .. }
            | Error::InsufficientData { .. }
            | Error::DimensionMismatch { .. } => ErrorClass::Data,
            Error::Numerical(_) | Error::Solver(_) => ErrorClass::Solver,
        }
    }

    pub(crate) fn invalid(name: &'static str, value: impl ToString, expected: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            expected,
        }
    }
}
