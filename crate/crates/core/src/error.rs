use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum FemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate element {element}: jacobian determinant {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("mesh file line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("unknown boundary label {0}")]
    UnknownLabel(u32),

    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: pivot {pivot:e} at row {row}")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("CG did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error("expression error at position {position}: {message}")]
    Expression { position: usize, message: String },

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FemError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FemError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FemError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FemError::DegenerateElement { .. }
                | FemError::SingularMatrix { .. }
                | FemError::NotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FemError>;
