use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate element {element}: area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("non-finite element average {value} on element {element}")]
    NonFiniteAverage { element: usize, value: f64 },

    #[error("components {from} and {to} are not connected in the dual graph")]
    Unreachable { from: usize, to: usize },

    #[error("graph has {vertices} vertices, reference solver is limited to {limit}")]
    GraphTooLarge { vertices: usize, limit: usize },

    #[error("decomposition was computed for field revision {expected}, field is at revision {found}")]
    StaleDecomposition { expected: u64, found: u64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("non-finite field value at step {step}")]
    NonFiniteField { step: usize },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
