use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in box [{x1}, {y1}, {x2}, {y2}]")]
    NonFinite { x1: f64, y1: f64, x2: f64, y2: f64 },

    #[error("inverted box [{x1}, {y1}, {x2}, {y2}]: require x1 <= x2 and y1 <= y2")]
    InvertedBox { x1: f64, y1: f64, x2: f64, y2: f64 },

    #[error("normalized box component {name} = {value} outside [0, 1]")]
    NormBoxRange { name: &'static str, value: f64 },

    #[error("image dimensions must be positive, got {width} x {height}")]
    ImageSize { width: f64, height: f64 },

    #[error("generalized IoU undefined: both boxes have zero area")]
    DegeneratePair,

    #[error("negative loss weight {name} = {value}")]
    NegativeWeight { name: &'static str, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("tolerance {name} = {value} outside (0, 1]")]
    Tolerance { name: &'static str, value: f64 },

    #[error("cell {index} does not intersect the table region")]
    CellOutsideTable { index: usize },

    #[error("{count} detected cells land on slot ({row}, {col})")]
    SlotConflict {
        row: usize,
        col: usize,
        count: usize,
    },

    #[error("slot ({row}, {col}) outside a {n_rows}x{n_cols} grid")]
    SlotOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("score {value} outside [0, 1]")]
    Score { value: f64 },

    #[error("text box has empty text")]
    EmptyText,

    #[error("prediction set of size {preds} is smaller than the {truths} ground-truth objects")]
    SetSize { preds: usize, truths: usize },

    #[error("invalid class distribution: {0}")]
    ClassProbs(String),

    #[error("class id {class_id} out of range for {n_classes} classes")]
    ClassId { class_id: usize, n_classes: usize },

    #[error(
        "grid shapes differ: prediction {pred_rows}x{pred_cols}, truth {truth_rows}x{truth_cols}"
    )]
    ShapeMismatch {
        pred_rows: usize,
        pred_cols: usize,
        truth_rows: usize,
        truth_cols: usize,
    },

    #[error("invalid synthetic config: {0}")]
    Config(String),

    #[error("{path}: unsupported version {found} (expected 1)")]
    Version { path: String, found: u64 },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: unknown field `{field}`")]
    UnknownField { path: String, field: String },

    #[error("{path}: byte-order mark not allowed")]
    ByteOrderMark { path: String },

    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
