//! Word-level accuracy between a predicted and a reference table.
//!
//!     cargo run --example word_accuracy

use tabgrid::{row_accuracy, word_accuracy, BBox, TableGrid, WordAccMode, WordCounts};

fn grid(rows: &[&[&str]]) -> tabgrid::Result<TableGrid> {
    let mut g = TableGrid::uniform(
        rows.len(),
        rows[0].len(),
        BBox::new(0.0, 0.0, 100.0, 100.0)?,
    )?;
    for (r, row) in rows.iter().enumerate() {
        for (c, text) in row.iter().enumerate() {
            g.set_text(r, c, text)?;
        }
    }
    Ok(g)
}

fn main() -> tabgrid::Result<()> {
    let truth = grid(&[&["net sales", "2021"], &["gross margin", "41.5 %"]])?;
    // first row shifted by one column, one misread character, one lost token
    let pred = grid(&[&["2021", "net sa1es"], &["gross margin", "41.5"]])?;
    for mode in [WordAccMode::Positional, WordAccMode::Bag] {
        let counts = word_accuracy(&pred, &truth, mode)?;
        println!(
            "{mode:?}: {}/{} words = {:.1}%",
            counts.x,
            counts.y,
            counts.accuracy()
        );
    }
    let rows = row_accuracy(&pred, &truth);
    println!("rows: {}/{} exact", rows.x, rows.y);
    println!(
        "2485 of 2785 words rounds to {}%",
        WordCounts::new(2485, 2785).accuracy_rounded()
    );
    Ok(())
}
