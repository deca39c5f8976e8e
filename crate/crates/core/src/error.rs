use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unsupported schema version {0} (expected 1)")]
    UnsupportedSchema(u32),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("nonzero diagonal: A({index},{index}) = {value}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("asymmetric similarity: A({i},{j}) = {a_ij} but A({j},{i}) = {a_ji}")]
    Asymmetric {
        i: usize,
        j: usize,
        a_ij: f64,
        a_ji: f64,
    },

    #[error("out-of-range entry: A({i},{j}) = {value} is outside [0, 1]")]
    OutOfRange { i: usize, j: usize, value: f64 },

    #[error("non-finite entry in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("power constraint violated: average power {average} exceeds 1")]
    PowerConstraint { average: f64 },

    #[error("coincident points: messages {i} and {j} are at squared distance {distance_sq:e}")]
    CoincidentPoints { i: usize, j: usize, distance_sq: f64 },

    #[error("could not draw a separated initial constellation after {attempts} attempts")]
    ResampleExhausted { attempts: usize },

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("{family} cannot label {m} messages over {n} channel uses")]
    TooManyMessages {
        family: &'static str,
        m: usize,
        n: usize,
    },
}

impl Error {
    /// True for errors caused by malformed or inconsistent input, as opposed
    /// to failures that happen while a computation is running.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::CoincidentPoints { .. } | Error::ResampleExhausted { .. } | Error::ZeroVector(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
