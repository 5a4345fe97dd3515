//! Centroid-gated text-to-cell assignment.
//!
//! A text box may land in cell `(r, c)` only when its centroid lies within
//! half the cell's extent of the cell centroid on both axes. Among the cells
//! passing the gate the nearest centroid wins; ties go to the lower row, then
//! the lower column. Text passing no gate stays unassigned and empty cells
//! stay empty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Point};
use crate::grid::{check_score, TableGrid};

/// One OCR unit: a box and its recognized string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTextBox")]
pub struct TextBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub text: String,
    pub score: f64,
}

#[derive(Deserialize)]
struct RawTextBox {
    #[serde(rename = "box")]
    bbox: BBox,
    text: String,
    score: f64,
}

impl TryFrom<RawTextBox> for TextBox {
    type Error = Error;

    fn try_from(raw: RawTextBox) -> Result<Self> {
        TextBox::new(raw.bbox, raw.text, raw.score)
    }
}

impl TextBox {
    pub fn new(bbox: BBox, text: impl Into<String>, score: f64) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        check_score(score)?;
        Ok(Self { bbox, text, score })
    }
}

/// Which half-extent bounds the vertical gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    /// Horizontal gate uses width / 2, vertical gate uses height / 2.
    #[default]
    Prose,
    /// Both gates use width / 2.
    Literal,
}

/// Half-extent gate test of a text centroid against a cell box.
pub fn passes_gate(cell: &BBox, text_centroid: &Point, mode: GateMode) -> bool {
    let c = cell.centroid();
    let half_w = cell.width() / 2.0;
    let half_h = match mode {
        GateMode::Prose => cell.height() / 2.0,
        GateMode::Literal => half_w,
    };
    (text_centroid.x - c.x).abs() <= half_w && (text_centroid.y - c.y).abs() <= half_h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub text_index: usize,
    pub row: usize,
    pub col: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub grid: TableGrid,
    /// Indices of input texts that passed no cell's gate.
    pub unassigned: Vec<usize>,
    /// One entry per assigned text, ascending by `text_index`.
    pub assignments: Vec<Assignment>,
}

impl AssignmentResult {
    pub fn unassigned_texts<'a>(&self, texts: &'a [TextBox]) -> Vec<&'a TextBox> {
        self.unassigned.iter().map(|&i| &texts[i]).collect()
    }
}

/// Best cell for a single centroid, or `None` when no gate admits it.
pub fn best_cell(
    grid: &TableGrid,
    centroid: &Point,
    mode: GateMode,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (row, col, cell) in grid.iter() {
        if !passes_gate(&cell.bbox, centroid, mode) {
            continue;
        }
        let d = centroid.distance(&cell.bbox.centroid());
        // row-major iteration already yields (row, col) ascending, so only a
        // strictly smaller distance displaces the incumbent
        if best.is_none_or(|(_, _, bd)| d < bd) {
            best = Some((row, col, d));
        }
    }
    best
}

/// Reading order inside one cell: top edge, then left edge, then the text,
/// then the original index. Returns the text indices in that order.
pub fn order_cell_contents(tokens: &[(usize, &TextBox)]) -> Vec<usize> {
    let mut sorted: Vec<&(usize, &TextBox)> = tokens.iter().collect();
    sorted.sort_by(|(ia, a), (ib, b)| {
        a.bbox
            .y1()
            .total_cmp(&b.bbox.y1())
            .then(a.bbox.x1().total_cmp(&b.bbox.x1()))
            .then_with(|| a.text.cmp(&b.text))
            .then(ia.cmp(ib))
    });
    sorted.into_iter().map(|(i, _)| *i).collect()
}

/// Assigns every text box to at most one grid cell and fills cell contents.
///
/// Any contents already present on `grid` are discarded.
pub fn assign_text(grid: &TableGrid, texts: &[TextBox], mode: GateMode) -> AssignmentResult {
    let mut grid = grid.clone();
    grid.clear_contents();
    let n_cols = grid.n_cols();

    let mut assignments = Vec::new();
    let mut unassigned = Vec::new();
    let mut per_cell: Vec<Vec<(usize, &TextBox)>> = vec![Vec::new(); grid.cells().len()];
    for (text_index, text) in texts.iter().enumerate() {
        match best_cell(&grid, &text.bbox.centroid(), mode) {
            Some((row, col, distance)) => {
                assignments.push(Assignment {
                    text_index,
                    row,
                    col,
                    distance,
                });
                per_cell[row * n_cols + col].push((text_index, text));
            }
            None => unassigned.push(text_index),
        }
    }

    for (slot, tokens) in per_cell.iter().enumerate() {
        if tokens.is_empty() {
            continue;
        }
        let contents = order_cell_contents(tokens)
            .into_iter()
            .map(|i| texts[i].text.trim().to_string())
            .collect();
        if let Some(cell) = grid.get_mut(slot / n_cols, slot % n_cols) {
            cell.contents = contents;
        }
    }

    AssignmentResult {
        grid,
        unassigned,
        assignments,
    }
}
