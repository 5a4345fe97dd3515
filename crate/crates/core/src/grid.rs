//! Row/column lattice inference from an unordered set of detected cell boxes.
//!
//! Rows are found by 1-D gap clustering of cell-centroid y values: values are
//! sorted and a new row starts whenever the gap to the previous centroid
//! exceeds `row_tol * median cell height`. Columns use x and the median width.
//! Lattice slots without a detected cell are kept as empty cells with a
//! synthesized box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellSource {
    Bordered,
    Borderless,
}

/// A cell region reported by the structure recognizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
    pub source: CellSource,
}

impl CellBox {
    pub fn new(bbox: BBox, score: f64, source: CellSource) -> Result<Self> {
        check_score(score)?;
        Ok(Self {
            bbox,
            score,
            source,
        })
    }
}

pub(crate) fn check_score(score: f64) -> Result<()> {
    if (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(Error::Score { value: score })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub bbox: BBox,
    /// Text tokens in reading order; filled by text assignment.
    pub contents: Vec<String>,
    /// A detected cell backs this slot.
    pub occupied: bool,
    pub source: Option<CellSource>,
}

impl GridCell {
    /// Contents joined with single spaces and trimmed.
    pub fn text(&self) -> String {
        let joined = self.contents.join(" ");
        joined.trim().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConflictPolicy {
    /// Keep the union box and record a warning.
    #[default]
    Merge,
    /// Fail when two detected cells land in one slot.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMerge {
    pub row: usize,
    pub col: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub row_tol: f64,
    pub col_tol: f64,
    pub conflicts: ConflictPolicy,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            row_tol: 0.5,
            col_tol: 0.5,
            conflicts: ConflictPolicy::Merge,
        }
    }
}

/// Complete `n_rows x n_cols` lattice, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<GridCell>,
    table_box: BBox,
    merges: Vec<SlotMerge>,
    cell_slots: Vec<(usize, usize)>,
}

impl TableGrid {
    /// Empty lattice whose cell boxes partition `table_box` uniformly.
    pub fn uniform(n_rows: usize, n_cols: usize, table_box: BBox) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyInput(
                "grid needs at least one row and one column",
            ));
        }
        let cells = (0..n_rows)
            .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
            .map(|(r, c)| GridCell {
                bbox: uniform_slot(&table_box, n_rows, n_cols, r, c),
                contents: Vec::new(),
                occupied: false,
                source: None,
            })
            .collect();
        Ok(Self {
            n_rows,
            n_cols,
            cells,
            table_box,
            merges: Vec::new(),
            cell_slots: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn table_box(&self) -> BBox {
        self.table_box
    }

    /// Slots that more than one detected cell landed on.
    /// `(row, col)` of each input cell passed to [`infer_grid`], in input order.
    pub fn cell_slots(&self) -> &[(usize, usize)] {
        &self.cell_slots
    }

    pub fn merges(&self) -> &[SlotMerge] {
        &self.merges
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&GridCell> {
        if row < self.n_rows && col < self.n_cols {
            self.cells.get(row * self.n_cols + col)
        } else {
            None
        }
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> Option<&mut GridCell> {
        if row < self.n_rows && col < self.n_cols {
            self.cells.get_mut(row * self.n_cols + col)
        } else {
            None
        }
    }

    /// Iterates `(row, col, cell)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &GridCell)> {
        let n_cols = self.n_cols;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, cell)| (i / n_cols, i % n_cols, cell))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[GridCell]> {
        self.cells.chunks(self.n_cols)
    }

    /// Cell strings, row-major.
    pub fn text_rows(&self) -> Vec<Vec<String>> {
        self.rows()
            .map(|row| row.iter().map(GridCell::text).collect())
            .collect()
    }

    pub fn clear_contents(&mut self) {
        for cell in &mut self.cells {
            cell.contents.clear();
        }
    }

    pub fn set_text(&mut self, row: usize, col: usize, text: &str) -> Result<()> {
        let (n_rows, n_cols) = self.shape();
        let cell = self.get_mut(row, col).ok_or(Error::SlotOutOfRange {
            row,
            col,
            n_rows,
            n_cols,
        })?;
        cell.contents = text.split_whitespace().map(str::to_string).collect();
        Ok(())
    }
}

fn uniform_slot(table: &BBox, n_rows: usize, n_cols: usize, r: usize, c: usize) -> BBox {
    let (x1, x2) = uniform_band(table.x1(), table.x2(), n_cols, c);
    let (y1, y2) = uniform_band(table.y1(), table.y2(), n_rows, r);
    BBox::from_ordered(x1, y1, x2, y2)
}

fn uniform_band(lo: f64, hi: f64, n: usize, i: usize) -> (f64, f64) {
    let step = (hi - lo) / n as f64;
    let a = lo + step * i as f64;
    let b = if i + 1 == n {
        hi
    } else {
        lo + step * (i + 1) as f64
    };
    (a.min(b), b.max(a))
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Gap clustering on a line. Returns a cluster label per input value (labels
/// ascend with value) and the number of clusters.
pub fn cluster_1d(values: &[f64], max_gap: f64) -> (Vec<usize>, usize) {
    if values.is_empty() {
        return (Vec::new(), 0);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut labels = vec![0; values.len()];
    let mut label = 0;
    for pair in order.windows(2) {
        if values[pair[1]] - values[pair[0]] > max_gap {
            label += 1;
        }
        labels[pair[1]] = label;
    }
    (labels, label + 1)
}

fn check_tol(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::Tolerance { name, value })
    }
}

/// Infers the lattice from detected cells.
pub fn infer_grid(cells: &[CellBox], table_box: BBox, opts: &GridOptions) -> Result<TableGrid> {
    if cells.is_empty() {
        return Err(Error::EmptyInput("no detected cells"));
    }
    check_tol("row_tol", opts.row_tol)?;
    check_tol("col_tol", opts.col_tol)?;
    for (index, cell) in cells.iter().enumerate() {
        check_score(cell.score)?;
        if !cell.bbox.intersects(&table_box) {
            return Err(Error::CellOutsideTable { index });
        }
    }

    let centroids: Vec<_> = cells.iter().map(|c| c.bbox.centroid()).collect();
    let median_h = median(cells.iter().map(|c| c.bbox.height()).collect());
    let median_w = median(cells.iter().map(|c| c.bbox.width()).collect());
    let ys: Vec<f64> = centroids.iter().map(|p| p.y).collect();
    let xs: Vec<f64> = centroids.iter().map(|p| p.x).collect();
    let (row_of, n_rows) = cluster_1d(&ys, opts.row_tol * median_h);
    let (col_of, n_cols) = cluster_1d(&xs, opts.col_tol * median_w);

    let mut slots: Vec<Vec<&CellBox>> = vec![Vec::new(); n_rows * n_cols];
    for (i, cell) in cells.iter().enumerate() {
        slots[row_of[i] * n_cols + col_of[i]].push(cell);
    }

    let mut merges = Vec::new();
    let mut grid_cells = Vec::with_capacity(slots.len());
    for (i, slot) in slots.iter().enumerate() {
        let (row, col) = (i / n_cols, i % n_cols);
        if slot.len() > 1 {
            if opts.conflicts == ConflictPolicy::Strict {
                return Err(Error::SlotConflict {
                    row,
                    col,
                    count: slot.len(),
                });
            }
            merges.push(SlotMerge {
                row,
                col,
                count: slot.len(),
            });
        }
        let cell = match slot.split_first() {
            Some((first, rest)) => GridCell {
                bbox: rest
                    .iter()
                    .fold(first.bbox, |acc, c| acc.union_hull(&c.bbox)),
                contents: Vec::new(),
                occupied: true,
                source: slot.iter().map(|c| c.source).min(),
            },
            None => GridCell {
                // placeholder, replaced below once every occupied slot is known
                bbox: table_box,
                contents: Vec::new(),
                occupied: false,
                source: None,
            },
        };
        grid_cells.push(cell);
    }

    let mut grid = TableGrid {
        n_rows,
        n_cols,
        cells: grid_cells,
        table_box,
        merges,
        cell_slots: row_of.into_iter().zip(col_of).collect(),
    };
    let empty: Vec<(usize, usize)> = grid
        .iter()
        .filter(|(_, _, cell)| !cell.occupied)
        .map(|(r, c, _)| (r, c))
        .collect();
    for (r, c) in empty {
        let bbox = synthesize_empty_box(&grid, r, c)?;
        grid.cells[r * n_cols + c].bbox = bbox;
    }
    Ok(grid)
}

/// Box for an unoccupied slot: row `row`'s y-band crossed with column `col`'s
/// x-band, each taken from the occupied cells of that row/column. A band with
/// no occupied cell falls back to the uniform partition of the table box.
/// The result is clamped into the table box.
pub fn synthesize_empty_box(grid: &TableGrid, row: usize, col: usize) -> Result<BBox> {
    let (n_rows, n_cols) = grid.shape();
    if row >= n_rows || col >= n_cols {
        return Err(Error::SlotOutOfRange {
            row,
            col,
            n_rows,
            n_cols,
        });
    }
    let table = grid.table_box;
    let row_band = band((0..n_cols).filter_map(|c| grid.get(row, c)), |b| {
        (b.y1(), b.y2())
    })
    .unwrap_or_else(|| uniform_band(table.y1(), table.y2(), n_rows, row));
    let col_band = band((0..n_rows).filter_map(|r| grid.get(r, col)), |b| {
        (b.x1(), b.x2())
    })
    .unwrap_or_else(|| uniform_band(table.x1(), table.x2(), n_cols, col));
    Ok(BBox::from_ordered(col_band.0, row_band.0, col_band.1, row_band.1).clamp_within(&table))
}

fn band<'a>(
    cells: impl Iterator<Item = &'a GridCell>,
    extent: impl Fn(&BBox) -> (f64, f64),
) -> Option<(f64, f64)> {
    cells
        .filter(|c| c.occupied)
        .map(|c| extent(&c.bbox))
        .reduce(|(a0, a1), (b0, b1)| (a0.min(b0), a1.max(b1)))
}
