use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the hypervolume toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("points need at least 2 objectives, got {0}")]
    TooFewObjectives(usize),

    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty input")]
    Empty,

    #[error("point {dominating} dominates point {dominated}")]
    DominatedPair { dominating: usize, dominated: usize },

    #[error("points {first} and {second} are identical")]
    DuplicatePoint { first: usize, second: usize },

    #[error("reference point is not strictly dominated by point {index} (objective {objective})")]
    ReferenceViolation { index: usize, objective: usize },

    #[error("set of {size} points exceeds the limit of {limit}")]
    SetTooLarge { size: usize, limit: usize },

    #[error("degenerate axis {axis}: reference coordinate equals the axis minimum")]
    DegenerateAxis { axis: usize },

    #[error("coordinate {value} of point {index} lies outside [0, 1]")]
    OutOfUnitBox { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{}:{line}", path.display())]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model format: {0}")]
    Format(String),

    #[error("generation gave up after {0} candidate pools")]
    RetryLimit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
