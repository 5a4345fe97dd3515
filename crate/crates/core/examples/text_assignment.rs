//! Placing recognized text into grid cells by the half-extent centroid gate.
//!
//!     cargo run --example text_assignment

use tabgrid::csvio::grid_to_csv;
use tabgrid::{assign_text, BBox, GateMode, TableGrid, TextBox};

fn main() -> tabgrid::Result<()> {
    let grid = TableGrid::uniform(2, 2, BBox::new(0.0, 0.0, 200.0, 80.0)?)?;
    let text = |x1, y1, x2, y2, t: &str| TextBox::new(BBox::new(x1, y1, x2, y2).unwrap(), t, 0.95);
    let texts = vec![
        text(10.0, 5.0, 60.0, 20.0, "Region")?,
        text(110.0, 10.0, 180.0, 30.0, "Revenue")?,
        text(10.0, 50.0, 60.0, 70.0, "North")?,
        text(120.0, 45.0, 150.0, 60.0, "1,204")?,
        text(150.0, 45.0, 190.0, 60.0, "USD")?,
        text(210.0, 90.0, 260.0, 110.0, "footnote")?,
    ];
    let result = assign_text(&grid, &texts, GateMode::Prose);
    for a in &result.assignments {
        println!(
            "{:>10} -> ({}, {}) at distance {:.1}",
            texts[a.text_index].text, a.row, a.col, a.distance
        );
    }
    for t in result.unassigned_texts(&texts) {
        println!("{:>10} -> unassigned", t.text);
    }
    print!("{}", grid_to_csv(&result.grid)?);
    Ok(())
}
