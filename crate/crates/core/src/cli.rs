//! Command-line front end. All configuration comes from flags; no environment
//! variables are read.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{match_sets, WordAccMode};
use crate::formats::{
    parse_json, read_file, write_json, DetectionDocument, PredictionSetFile, TruthDocument,
    TruthSetFile,
};
use crate::geometry::BoxLossWeights;
use crate::grid::{ConflictPolicy, GridOptions};
use crate::mapping::GateMode;
use crate::pipeline::{
    assemble, evaluate, evaluate_manifest, write_assembly, AssembleOptions, EvalOptions,
    OutputFormat, EVAL_REPORT_FILE,
};
use crate::synth::{corpus, SynthConfigFile, MANIFEST_FILE};

pub const MATCH_REPORT_FILE: &str = "match_report.json";

#[derive(Debug, Parser)]
#[command(
    name = "tabgrid",
    version,
    about = "Assemble tables from detector output and score them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one CSV per table from a detection document.
    Assemble {
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[command(flatten)]
        assembly: AssemblyFlags,
    },
    /// Score predicted detections against a truth document or a synthetic manifest.
    Evaluate {
        /// Detection document to assemble and score.
        #[arg(long, required_unless_present = "manifest", requires = "truth")]
        pred: Option<PathBuf>,
        /// Truth document for `--pred`.
        #[arg(long, requires = "pred")]
        truth: Option<PathBuf>,
        /// Synthetic corpus manifest; scores every instance it lists.
        #[arg(long, conflicts_with_all = ["pred", "truth"])]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = WordAccMode::Positional)]
        wordacc: WordAccMode,
        #[command(flatten)]
        lambdas: LambdaFlags,
        #[command(flatten)]
        assembly: AssemblyFlags,
    },
    /// Write a synthetic corpus (detections, truths, manifest).
    Synth {
        /// JSON file `{"version": 1, "configs": [...]}`; one default instance when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Optimal set matching between raw prediction and truth box sets.
    Match {
        pred: PathBuf,
        truth: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        lambdas: LambdaFlags,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct AssemblyFlags {
    #[arg(long, value_enum, default_value_t = GateMode::Prose)]
    pub gate: GateMode,
    #[arg(long, default_value_t = 0.5)]
    pub row_tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub col_tol: f64,
    #[arg(long, value_enum, default_value_t = ConflictPolicy::Merge)]
    pub conflicts: ConflictPolicy,
    /// Fail on unknown fields, failing tables and shape mismatches.
    #[arg(long)]
    pub strict: bool,
    /// Add per-stage wall-clock times to reports (makes output non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct LambdaFlags {
    #[arg(long, default_value_t = 2.0)]
    pub lambda_iou: f64,
    #[arg(long, default_value_t = 5.0)]
    pub lambda_l1: f64,
}

impl AssemblyFlags {
    fn options(&self) -> AssembleOptions {
        AssembleOptions {
            grid: GridOptions {
                row_tol: self.row_tol,
                col_tol: self.col_tol,
                conflicts: self.conflicts,
            },
            gate: self.gate,
            strict: self.strict,
            timings: self.timings,
        }
    }
}

impl LambdaFlags {
    fn weights(&self) -> BoxLossWeights {
        BoxLossWeights {
            lambda_iou: self.lambda_iou,
            lambda_l1: self.lambda_l1,
        }
    }
}

/// Outcome of a command: whether it completed without errors.
pub type Status = bool;

fn warn_ignored(err: &mut dyn Write, path: &Path, ignored: &[String]) {
    for field in ignored {
        let _ = writeln!(
            err,
            "warning: {}: ignored unknown field `{field}`",
            path.display()
        );
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Status> {
    match cli.command {
        Command::Assemble {
            input,
            out_dir,
            format,
            assembly,
        } => {
            let doc = DetectionDocument::load(&input, assembly.strict)?;
            warn_ignored(err, &input, &doc.ignored);
            let result = assemble(&doc.value, &assembly.options())?;
            write_assembly(&result, &out_dir, format)?;
            for w in &result.report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            for t in result.report.tables.iter().filter(|t| !t.ok) {
                let _ = writeln!(
                    err,
                    "error: table {}: {}",
                    t.index,
                    t.error.as_deref().unwrap_or("")
                );
            }
            let _ = writeln!(
                out,
                "assembled {} of {} tables into {}",
                result.report.n_tables - result.report.n_failed,
                result.report.n_tables,
                out_dir.display()
            );
            Ok(result.report.n_failed == 0)
        }
        Command::Evaluate {
            pred,
            truth,
            manifest,
            out_dir,
            wordacc,
            lambdas,
            assembly,
        } => {
            let opts = EvalOptions {
                assemble: assembly.options(),
                weights: lambdas.weights(),
                wordacc,
                strict: assembly.strict,
            };
            opts.weights.validate()?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            let report_path = out_dir.join(EVAL_REPORT_FILE);
            if let Some(manifest) = manifest {
                let report = evaluate_manifest(&manifest, &opts)?;
                write_json(&report_path, &report)?;
                for inst in &report.instances {
                    for w in &inst.warnings {
                        let _ = writeln!(err, "warning: {}: {w}", inst.id);
                    }
                }
                let _ = writeln!(
                    out,
                    "{} instances: mean IoU {:.4}, word accuracy {:.2}%",
                    report.n_instances, report.mean_table_iou, report.word_accuracy
                );
            } else {
                let (pred, truth) = (
                    pred.expect("clap enforces --pred"),
                    truth.expect("clap enforces --truth"),
                );
                let p = DetectionDocument::load(&pred, assembly.strict)?;
                let t = TruthDocument::load(&truth, assembly.strict)?;
                warn_ignored(err, &pred, &p.ignored);
                warn_ignored(err, &truth, &t.ignored);
                let report = evaluate(&p.value, &t.value, &opts)?;
                write_json(&report_path, &report)?;
                for w in &report.warnings {
                    let _ = writeln!(err, "warning: {w}");
                }
                let _ = writeln!(
                    out,
                    "mean IoU {:.4}, word accuracy {:.2}% ({}/{})",
                    report.mean_table_iou, report.word_accuracy, report.counts.x, report.counts.y
                );
            }
            Ok(true)
        }
        Command::Synth {
            config,
            out_dir,
            strict,
        } => {
            let file = match &config {
                Some(path) => {
                    let parsed: crate::formats::Parsed<SynthConfigFile> =
                        parse_json(&read_file(path)?, &path.display().to_string(), strict)?;
                    warn_ignored(err, path, &parsed.ignored);
                    if parsed.value.version != 1 {
                        return Err(Error::Version {
                            path: path.display().to_string(),
                            found: parsed.value.version,
                        });
                    }
                    parsed.value
                }
                None => SynthConfigFile::default(),
            };
            let manifest = corpus(&file.configs, &out_dir)?;
            let _ = writeln!(
                out,
                "wrote {} instances and {}",
                manifest.instances.len(),
                out_dir.join(MANIFEST_FILE).display()
            );
            Ok(true)
        }
        Command::Match {
            pred,
            truth,
            out_dir,
            lambdas,
            strict,
        } => {
            let p = PredictionSetFile::load(&pred, strict)?;
            let t = TruthSetFile::load(&truth, strict)?;
            warn_ignored(err, &pred, &p.ignored);
            warn_ignored(err, &truth, &t.ignored);
            let report = match_sets(&p.value.predictions, &t.value.truths, lambdas.weights())?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_json(&out_dir.join(MATCH_REPORT_FILE), &report)?;
            let _ = writeln!(
                out,
                "matched {} truths: cost {:.6}, loss {:.6}",
                report.assignment.len(),
                report.total_cost,
                report.loss
            );
            Ok(true)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, out, err) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
