use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: String, msg: String },
    #[error("column selectors overlap on {0:?}")]
    OverlappingSelectors(Vec<String>),
    #[error("column selection is empty")]
    EmptySelection,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("row count mismatch: x has {x_rows} rows, y has {y_rows}")]
    RowCountMismatch { x_rows: usize, y_rows: usize },
    #[error("index ({row}, {col}) out of bounds for a {n_rows}x{n_cols} matrix (1-based)")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry at ({row}, {col}) (1-based)")]
    DuplicateEntry { row: usize, col: usize },
    #[error("sample too small: need at least {min} rows, got {n}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("cyclic pairing needs at least 3 indices, got {0}")]
    DegeneratePairing(usize),
    #[error("invalid index list: {0}")]
    InvalidIndices(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: model expects {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expanded dimension {m} exceeds cap {cap}")]
    DimensionOverflow { m: usize, cap: usize },
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("loss became non-finite at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("training diverged at epoch {0} (non-finite loss)")]
    DivergenceDetected(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("score {0} outside the open unit interval")]
    ScoreOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("absolute continuity violated: p > 0 where q = 0 at support point {0}")]
    AbsoluteContinuityViolated(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            OverlappingSelectors(_) | EmptySelection | UnknownColumn(_) | InvalidParameter(_)
            | InvalidModel(_) | Config(_) => {
                ErrorCategory::Usage
            }
            NonFiniteLoss(_) | DivergenceDetected(_) => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}
