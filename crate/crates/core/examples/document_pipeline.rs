//! Full document path: detection document in, CSV text and an evaluation
//! report out, all in memory.
//!
//!     cargo run --example document_pipeline

use tabgrid::csvio::grid_to_csv;
use tabgrid::formats::to_json;
use tabgrid::pipeline::{assemble, evaluate, AssembleOptions, EvalOptions};
use tabgrid::synth::{generate, SynthConfig};

fn main() -> tabgrid::Result<()> {
    let inst = generate(&SynthConfig {
        centroid_jitter: 0.8,
        cell_dropout: 0.15,
        ..SynthConfig::new(4, 3, 7)
    })?;
    let assembled = assemble(&inst.detections, &AssembleOptions::default())?;
    for (i, table) in assembled.tables.iter().enumerate() {
        match table {
            Some(result) => print!("table {i}:\n{}", grid_to_csv(&result.grid)?),
            None => println!("table {i}: failed"),
        }
    }
    let report = evaluate(&inst.detections, &inst.truth, &EvalOptions::default())?;
    print!("{}", to_json(&report));
    Ok(())
}
