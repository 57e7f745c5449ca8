use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("location index {index} out of range for grid with {len} locations")]
    Index { index: usize, len: usize },

    #[error("cell ({col}, {row}) outside {width}x{height} grid")]
    CellOutOfRange {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("load {rho} is not below 1")]
    InfeasibleLoad { rho: f64 },

    #[error("queue with utilization {rho} is unstable")]
    UnstableQueue { rho: f64 },

    #[error("grid has {locations} locations, exhaustive search is limited to {limit}")]
    GridTooLarge { locations: usize, limit: usize },

    #[error("no split keeps the macro cell below full load (total load {rho}, cap {cap})")]
    InfeasibleSplit { rho: f64, cap: f64 },

    #[error("no feasible placement exists")]
    NoFeasiblePlacement,

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}
