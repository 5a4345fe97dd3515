//! Table assembly from detector outputs and evaluation against ground truth.
//!
//! The pipeline takes a table region, detected cell boxes and OCR text boxes,
//! infers the row/column lattice ([`grid`]), assigns each text box to a cell
//! with a centroid half-extent gate ([`mapping`]), and writes one CSV per
//! table ([`csvio`]). [`eval`] scores predictions with optimal set matching,
//! detection IoU and word-level accuracy; [`synth`] generates ground truth
//! with controlled noise for closed-loop checks.

pub mod cli;
pub mod csvio;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod grid;
pub mod lsap;
pub mod mapping;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{
    detection_iou, match_sets, row_accuracy, word_accuracy, DetectionIou, MatchReport, Prediction,
    Truth, WordAccMode, WordCounts,
};
pub use geometry::{centroid, giou, iou, l_box, to_corner, BBox, BoxLossWeights, NormBox, Point};
pub use grid::{
    infer_grid, synthesize_empty_box, CellBox, CellSource, ConflictPolicy, GridCell, GridOptions,
    TableGrid,
};
pub use mapping::{assign_text, order_cell_contents, AssignmentResult, GateMode, TextBox};
