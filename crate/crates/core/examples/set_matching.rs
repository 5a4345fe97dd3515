//! Optimal one-to-one matching of a fixed-size prediction set against ground
//! truth, with surplus predictions scored as no-object.
//!
//!     cargo run --example set_matching

use tabgrid::{match_sets, BoxLossWeights, NormBox, Prediction, Truth};

fn main() -> tabgrid::Result<()> {
    // classes: bordered, borderless, then no-object
    let preds = vec![
        Prediction::new(vec![0.1, 0.8, 0.1], NormBox::new(0.70, 0.30, 0.30, 0.20)?)?,
        Prediction::new(vec![0.7, 0.2, 0.1], NormBox::new(0.30, 0.60, 0.40, 0.30)?)?,
        Prediction::new(vec![0.05, 0.05, 0.9], NormBox::new(0.50, 0.50, 0.10, 0.10)?)?,
    ];
    let truths = vec![
        Truth {
            class_id: 0,
            bbox: NormBox::new(0.32, 0.62, 0.40, 0.30)?,
        },
        Truth {
            class_id: 1,
            bbox: NormBox::new(0.70, 0.28, 0.32, 0.20)?,
        },
    ];
    let report = match_sets(&preds, &truths, BoxLossWeights::default())?;
    for p in &report.per_pair {
        println!(
            "truth {} <- prediction {}: nll {:.4}, giou loss {:.4}, l1 {:.4}, cost {:.4}",
            p.truth, p.prediction, p.class_nll, p.giou_loss, p.l1, p.cost
        );
    }
    println!("unmatched predictions: {:?}", report.unmatched);
    println!(
        "total matched cost {:.4}, loss {:.4}",
        report.total_cost, report.loss
    );
    Ok(())
}
