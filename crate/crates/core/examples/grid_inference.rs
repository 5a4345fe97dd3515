//! Recovering a row/column lattice from loosely aligned cell boxes, with one
//! missing cell and one duplicate detection.
//!
//!     cargo run --example grid_inference

use tabgrid::{infer_grid, BBox, CellBox, CellSource, GridOptions};

fn main() -> tabgrid::Result<()> {
    let cell = |x1, y1, x2, y2| {
        CellBox::new(
            BBox::new(x1, y1, x2, y2).unwrap(),
            0.9,
            CellSource::Borderless,
        )
    };
    let cells = vec![
        cell(0.0, 0.0, 100.0, 30.0)?,
        cell(102.0, 1.0, 200.0, 31.0)?,
        cell(205.0, 0.0, 300.0, 29.0)?,
        cell(1.0, 32.0, 99.0, 60.0)?,
        // (1, 1) is missing; (1, 2) was detected twice
        cell(200.0, 30.0, 300.0, 60.0)?,
        cell(210.0, 33.0, 295.0, 58.0)?,
    ];
    let table = BBox::new(0.0, 0.0, 300.0, 60.0)?;
    let grid = infer_grid(&cells, table, &GridOptions::default())?;

    println!("shape: {:?}", grid.shape());
    for (r, c, cell) in grid.iter() {
        let state = if cell.occupied {
            "detected"
        } else {
            "synthesized"
        };
        println!("({r}, {c}) {state:<11} {:?}", cell.bbox.corners());
    }
    for m in grid.merges() {
        println!("merged {} detections into ({}, {})", m.count, m.row, m.col);
    }
    println!("input cell -> slot: {:?}", grid.cell_slots());
    Ok(())
}
