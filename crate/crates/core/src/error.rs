use std::path::PathBuf;

use crate::lowrank::SingularTriplet;

/// Errors produced by the background-modeling library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("a {rows}x{cols} matrix needs {expected} entries, got {found}")]
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid factorization: {0}")]
    InvalidFactorization(String),

    #[error("power iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<SingularTriplet>,
    },

    #[error(
        "materializing a {rows}x{cols} matrix exceeds the budget of {budget} entries; \
         stream it column by column with LowRankFactorization::column"
    )]
    BudgetExceeded {
        rows: usize,
        cols: usize,
        budget: usize,
    },

    #[error("search direction is zero; take a regular Frank-Wolfe step instead")]
    ZeroDirection,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("frame {id} is {found_width}x{found_height}, expected {width}x{height}")]
    FrameSize {
        id: String,
        width: usize,
        height: usize,
        found_width: usize,
        found_height: usize,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
