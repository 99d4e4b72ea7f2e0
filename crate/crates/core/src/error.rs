use std::path::PathBuf;

use thiserror::Error;

use crate::grid::Coord;

pub type Result<T, E = LuluError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LuluError {
    #[error("image domain must be non-empty, got {width}x{height}")]
    EmptyDomain { width: usize, height: usize },

    #[error("expected {expected} pixel values, got {actual}")]
    ValueCount { expected: usize, actual: usize },

    #[error("images differ in shape: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid connectivity: {0}")]
    InvalidConnectivity(String),

    #[error("unknown operator {0:?}; expected ln, un, lnun or unln")]
    UnknownOperator(String),

    #[error("size parameter n must be at least 1")]
    ZeroSize,

    #[error("pixel set is {0}; adjacency needs a non-empty connected set")]
    NotConnectedSet(&'static str),

    #[error("enumeration refused: {0}")]
    GuardrailExceeded(String),

    #[error(
        "extract_layer precondition violated at n={n}: local {polarity} set of size {size} \
         starting at {first:?}"
    )]
    LayerPrecondition {
        n: usize,
        polarity: &'static str,
        size: usize,
        first: Coord,
    },

    #[error("pulse layer {n} does not reproduce the operator difference at {at:?}")]
    LayerMismatch { n: usize, at: Coord },

    #[error("{path}: {message} (byte offset {offset})")]
    PgmParse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    PulseSchema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("value {value} cannot be stored as PGM with maxval {maxval}")]
    PgmRange { value: i64, maxval: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LuluError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LuluError::Io {
            path: path.into(),
            source,
        }
    }
}
