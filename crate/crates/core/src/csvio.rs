//! CSV emission for assembled tables.
//!
//! One record per grid row, LF line endings, fields quoted only when they
//! contain a comma, quote or line break (embedded quotes doubled). Empty cells
//! become empty fields.

use crate::error::Result;
use crate::grid::TableGrid;

fn writer() -> csv::WriterBuilder {
    let mut b = csv::WriterBuilder::new();
    b.has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary);
    b
}

/// Serializes rows of cell strings.
pub fn write_rows<R, S>(rows: R) -> Result<String>
where
    R: IntoIterator,
    R::Item: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = writer().from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer preserves UTF-8 input"))
}

/// CSV text of a grid's cell strings.
pub fn grid_to_csv(grid: &TableGrid) -> Result<String> {
    write_rows(grid.text_rows())
}

/// Parses CSV text back into rows of strings. All records must have the same width.
pub fn parse_csv(text: &str) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in r.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok(rows)
}
