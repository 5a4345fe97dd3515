//! End-to-end assembly and evaluation over whole documents.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::csvio::grid_to_csv;
use crate::error::{Error, Result};
use crate::eval::{
    detection_iou, match_sets, row_accuracy, word_accuracy, MatchReport, Prediction, Truth,
    WordAccMode, WordCounts,
};
use crate::formats::{
    class_index, write_json, DetectedTable, DetectionDocument, TruthDocument, FORMAT_VERSION,
};
use crate::geometry::{BoxLossWeights, NormBox};
use crate::grid::{infer_grid, CellSource, GridOptions, SlotMerge, TableGrid};
use crate::mapping::{assign_text, AssignmentResult, GateMode};
use crate::synth::Manifest;

pub const ASSEMBLY_REPORT_FILE: &str = "assembly_report.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

pub fn csv_file_name(table_index: usize) -> String {
    format!("table_{table_index:03}.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssembleOptions {
    pub grid: GridOptions,
    pub gate: GateMode,
    /// Abort on the first failing table instead of isolating it.
    pub strict: bool,
    /// Record wall-clock time per stage in reports.
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// CSV per table plus the report.
    #[default]
    Csv,
    ReportOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub index: usize,
    pub ok: bool,
    pub source: CellSource,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_cells_detected: usize,
    pub n_texts: usize,
    pub n_assigned_texts: usize,
    pub n_unassigned_texts: usize,
    pub conflicts: Vec<SlotMerge>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub version: u64,
    pub n_tables: usize,
    pub n_failed: usize,
    pub tables: Vec<TableSummary>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

/// Assembled document: one outcome per input table, in input order.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub tables: Vec<Option<AssignmentResult>>,
    pub report: AssemblyReport,
}

#[derive(Default)]
struct Stopwatch {
    enabled: bool,
    totals: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            totals: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        if !self.enabled {
            return f();
        }
        let start = Instant::now();
        let out = f();
        *self.totals.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.totals)
    }
}

/// Grid inference followed by text assignment for one table.
pub fn assemble_table(table: &DetectedTable, opts: &AssembleOptions) -> Result<AssignmentResult> {
    let grid = infer_grid(&table.cells, table.bbox, &opts.grid)?;
    Ok(assign_text(&grid, &table.texts, opts.gate))
}

fn summarize(
    index: usize,
    table: &DetectedTable,
    outcome: &Result<AssignmentResult>,
) -> TableSummary {
    let mut s = TableSummary {
        index,
        ok: outcome.is_ok(),
        source: table.class,
        n_rows: 0,
        n_cols: 0,
        n_cells_detected: table.cells.len(),
        n_texts: table.texts.len(),
        n_assigned_texts: 0,
        n_unassigned_texts: 0,
        conflicts: Vec::new(),
        csv: None,
        error: None,
    };
    match outcome {
        Ok(r) => {
            (s.n_rows, s.n_cols) = r.grid.shape();
            s.n_assigned_texts = r.assignments.len();
            s.n_unassigned_texts = r.unassigned.len();
            s.conflicts = r.grid.merges().to_vec();
        }
        Err(e) => s.error = Some(e.to_string()),
    }
    s
}

/// Assembles every table of a document. Failing tables are isolated unless
/// `opts.strict`, in which case the first failure is returned.
pub fn assemble(doc: &DetectionDocument, opts: &AssembleOptions) -> Result<Assembly> {
    let mut watch = Stopwatch::new(opts.timings);
    let mut tables = Vec::with_capacity(doc.tables.len());
    let mut summaries = Vec::with_capacity(doc.tables.len());
    let mut warnings = Vec::new();
    for (i, table) in doc.tables.iter().enumerate() {
        let outcome = watch
            .time("grid", || infer_grid(&table.cells, table.bbox, &opts.grid))
            .map(|grid| watch.time("assign", || assign_text(&grid, &table.texts, opts.gate)));
        if opts.strict {
            if let Err(e) = outcome {
                return Err(Error::Invalid {
                    path: format!("tables[{i}]"),
                    message: e.to_string(),
                });
            }
        }
        let mut summary = summarize(i, table, &outcome);
        for m in &summary.conflicts {
            warnings.push(format!(
                "table {i}: {} detected cells merged into slot ({}, {})",
                m.count, m.row, m.col
            ));
        }
        if let Ok(r) = &outcome {
            if !r.unassigned.is_empty() {
                warnings.push(format!(
                    "table {i}: {} text boxes outside every cell gate",
                    r.unassigned.len()
                ));
            }
            summary.csv = Some(csv_file_name(i));
        }
        summaries.push(summary);
        tables.push(outcome.ok());
    }
    let n_failed = tables.iter().filter(|t| t.is_none()).count();
    Ok(Assembly {
        tables,
        report: AssemblyReport {
            version: FORMAT_VERSION,
            n_tables: doc.tables.len(),
            n_failed,
            tables: summaries,
            warnings,
            timings_ms: watch.finish(),
        },
    })
}

/// Writes CSVs (unless report-only) and the assembly report into `out_dir`.
pub fn write_assembly(assembly: &Assembly, out_dir: &Path, format: OutputFormat) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = assembly.report.clone();
    for (i, outcome) in assembly.tables.iter().enumerate() {
        let Some(result) = outcome else { continue };
        if format == OutputFormat::Csv {
            let path = out_dir.join(csv_file_name(i));
            std::fs::write(&path, grid_to_csv(&result.grid)?).map_err(|e| Error::io(&path, e))?;
        } else {
            report.tables[i].csv = None;
        }
    }
    write_json(&out_dir.join(ASSEMBLY_REPORT_FILE), &report)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub assemble: AssembleOptions,
    pub weights: BoxLossWeights,
    /// Mode reported as the headline `word_accuracy`.
    pub wordacc: WordAccMode,
    /// Shape mismatches and skipped set matching become errors.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u64,
    pub mean_table_iou: f64,
    pub per_table_iou: Vec<f64>,
    /// Predicted table index paired with each truth table.
    pub table_pairs: Vec<Option<usize>>,
    pub word_accuracy: f64,
    pub word_accuracy_mode: WordAccMode,
    pub word_accuracy_positional: f64,
    pub word_accuracy_bag: f64,
    pub row_accuracy: f64,
    pub counts: WordCounts,
    pub counts_positional: WordCounts,
    pub counts_bag: WordCounts,
    pub counts_rows: WordCounts,
    /// Set-matching result; absent when predictions carry no class probabilities.
    pub hungarian: Option<MatchReport>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

fn set_matching(
    pred: &DetectionDocument,
    truth: &TruthDocument,
    opts: &EvalOptions,
    warnings: &mut Vec<String>,
) -> Result<Option<MatchReport>> {
    let probs: Option<Vec<&Vec<f64>>> =
        pred.tables.iter().map(|t| t.class_probs.as_ref()).collect();
    let Some(probs) = probs else {
        return Ok(None);
    };
    let mut preds = Vec::with_capacity(probs.len());
    for (t, p) in pred.tables.iter().zip(probs) {
        preds.push(Prediction::new(
            p.clone(),
            NormBox::from_corner(&t.bbox, pred.image_w, pred.image_h)?,
        )?);
    }
    let mut truths = Vec::with_capacity(truth.tables.len());
    for t in &truth.tables {
        truths.push(Truth {
            class_id: class_index(t.class),
            bbox: NormBox::from_corner(&t.bbox, truth.image_w, truth.image_h)?,
        });
    }
    match match_sets(&preds, &truths, opts.weights) {
        Ok(r) => Ok(Some(r)),
        Err(e) if !opts.strict => {
            warnings.push(format!("set matching skipped: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Assembles `pred` and scores it against `truth`.
pub fn evaluate(
    pred: &DetectionDocument,
    truth: &TruthDocument,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let assembly = assemble(pred, &opts.assemble)?;
    let mut watch = Stopwatch::new(opts.assemble.timings);
    let mut warnings: Vec<String> = assembly
        .report
        .tables
        .iter()
        .filter_map(|t| {
            t.error
                .as_ref()
                .map(|e| format!("prediction table {}: {e}", t.index))
        })
        .collect();

    let pred_boxes: Vec<_> = pred.tables.iter().map(|t| t.bbox).collect();
    let truth_boxes: Vec<_> = truth.tables.iter().map(|t| t.bbox).collect();
    let det = watch.time("detection_iou", || detection_iou(&pred_boxes, &truth_boxes));
    let hungarian = watch.time("set_matching", || {
        set_matching(pred, truth, opts, &mut warnings)
    })?;

    let mut positional = WordCounts::default();
    let mut bag = WordCounts::default();
    let mut rows = WordCounts::default();
    let start = opts.assemble.timings.then(Instant::now);
    for (ti, table) in truth.tables.iter().enumerate() {
        let truth_grid = table.to_grid()?;
        let pred_grid: Option<&TableGrid> = det.pairs[ti]
            .and_then(|pi| assembly.tables[pi].as_ref())
            .map(|r| &r.grid);
        let Some(pred_grid) = pred_grid else {
            let y = word_accuracy(&truth_grid, &truth_grid, WordAccMode::Bag)?.y;
            positional += WordCounts::new(0, y);
            bag += WordCounts::new(0, y);
            rows += WordCounts::new(0, truth_grid.n_rows());
            continue;
        };
        let bag_counts = word_accuracy(pred_grid, &truth_grid, WordAccMode::Bag)?;
        bag += bag_counts;
        positional += match word_accuracy(pred_grid, &truth_grid, WordAccMode::Positional) {
            Ok(c) => c,
            Err(e @ Error::ShapeMismatch { .. }) => {
                if opts.strict {
                    return Err(e);
                }
                warnings.push(format!(
                    "truth table {ti}: {e}; positional accuracy falls back to bag"
                ));
                bag_counts
            }
            Err(e) => return Err(e),
        };
        rows += row_accuracy(pred_grid, &truth_grid);
    }
    let mut timings = watch.finish();
    if let (Some(t), Some(start)) = (timings.as_mut(), start) {
        t.insert("word_accuracy".into(), start.elapsed().as_secs_f64() * 1e3);
        if let Some(a) = &assembly.report.timings_ms {
            t.extend(a.iter().map(|(k, v)| (k.clone(), *v)));
        }
    }

    let counts = match opts.wordacc {
        WordAccMode::Positional => positional,
        WordAccMode::Bag => bag,
    };
    Ok(EvalReport {
        version: FORMAT_VERSION,
        mean_table_iou: det.mean,
        per_table_iou: det.per_table,
        table_pairs: det.pairs,
        word_accuracy: counts.accuracy(),
        word_accuracy_mode: opts.wordacc,
        word_accuracy_positional: positional.accuracy(),
        word_accuracy_bag: bag.accuracy(),
        row_accuracy: rows.accuracy(),
        counts,
        counts_positional: positional,
        counts_bag: bag,
        counts_rows: rows,
        hungarian,
        warnings,
        timings_ms: timings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: String,
    pub seed: u64,
    pub mean_table_iou: f64,
    pub word_accuracy: f64,
    pub counts: WordCounts,
    pub row_accuracy: f64,
    pub hungarian_loss: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub version: u64,
    pub n_instances: usize,
    /// Mean IoU over every truth table in the corpus.
    pub mean_table_iou: f64,
    pub word_accuracy: f64,
    pub word_accuracy_mode: WordAccMode,
    pub word_accuracy_positional: f64,
    pub word_accuracy_bag: f64,
    pub row_accuracy: f64,
    pub counts: WordCounts,
    pub counts_positional: WordCounts,
    pub counts_bag: WordCounts,
    pub counts_rows: WordCounts,
    pub instances: Vec<InstanceSummary>,
}

/// Evaluates every pair listed in a synthetic-corpus manifest.
pub fn evaluate_manifest(manifest_path: &Path, opts: &EvalOptions) -> Result<CorpusReport> {
    let manifest = Manifest::load(manifest_path, opts.strict)?.value;
    let mut instances = Vec::with_capacity(manifest.instances.len());
    let (mut positional, mut bag, mut rows) = (
        WordCounts::default(),
        WordCounts::default(),
        WordCounts::default(),
    );
    let mut iou_sum = 0.0;
    let mut iou_n = 0usize;
    for entry in &manifest.instances {
        let (det_path, truth_path) = Manifest::resolve(manifest_path, entry);
        let pred = DetectionDocument::load(&det_path, opts.strict)?;
        let truth = TruthDocument::load(&truth_path, opts.strict)?;
        let mut report = evaluate(&pred.value, &truth.value, opts)?;
        let mut ignored = pred
            .ignored
            .iter()
            .chain(&truth.ignored)
            .map(|f| format!("ignored field `{f}`"));
        report.warnings.extend(&mut ignored);
        positional += report.counts_positional;
        bag += report.counts_bag;
        rows += report.counts_rows;
        iou_sum += report.per_table_iou.iter().sum::<f64>();
        iou_n += report.per_table_iou.len();
        instances.push(InstanceSummary {
            id: entry.id.clone(),
            seed: entry.seed,
            mean_table_iou: report.mean_table_iou,
            word_accuracy: report.word_accuracy,
            counts: report.counts,
            row_accuracy: report.row_accuracy,
            hungarian_loss: report.hungarian.as_ref().map(|h| h.loss),
            warnings: report.warnings,
        });
    }
    let counts: WordCounts = match opts.wordacc {
        WordAccMode::Positional => positional,
        WordAccMode::Bag => bag,
    };
    Ok(CorpusReport {
        version: FORMAT_VERSION,
        n_instances: instances.len(),
        mean_table_iou: if iou_n == 0 {
            1.0
        } else {
            iou_sum / iou_n as f64
        },
        word_accuracy: counts.accuracy(),
        word_accuracy_mode: opts.wordacc,
        word_accuracy_positional: positional.accuracy(),
        word_accuracy_bag: bag.accuracy(),
        row_accuracy: rows.accuracy(),
        counts,
        counts_positional: positional,
        counts_bag: bag,
        counts_rows: rows,
        instances,
    })
}
