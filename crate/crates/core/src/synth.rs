//! Synthetic ground truth and noisy detector output for closed-loop checks.
//!
//! Each instance is one regular table. Every cell holds one text box of 1-3
//! pseudo-words; noise is applied to the detections only. All randomness comes
//! from the config seed, split into independent ChaCha streams per noise
//! source so raising one noise level never reshuffles another.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{
    class_index, write_json, DetectedTable, DetectionDocument, Parsed, TruthDocument, TruthGrid,
    TruthTable, FORMAT_VERSION, TABLE_CLASSES,
};
use crate::geometry::BBox;
use crate::grid::{CellBox, TableGrid};
use crate::mapping::TextBox;

const TEXT_W_FRAC: f64 = 0.6;
const TEXT_H_FRAC: f64 = 0.5;
const NOISE_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

const WORDS: &[&str] = &[
    "amber", "basin", "cedar", "delta", "ember", "fjord", "glade", "harbor", "inlet", "juniper",
    "kestrel", "lagoon", "meadow", "nectar", "orchid", "prairie", "quartz", "ridge", "summit",
    "tundra", "upland", "valley", "willow", "yarrow", "zephyr", "north", "south", "east", "west",
    "total", "net", "gross", "q1", "q2", "q3", "q4", "2019", "2020", "2021", "2022", "12", "47",
    "305", "880", "rate", "count", "mean", "share",
];

mod stream {
    pub const LAYOUT: u64 = 0;
    pub const CELL_DROP: u64 = 1;
    pub const TEXT_JITTER: u64 = 2;
    pub const TEXT_DROP: u64 = 3;
    pub const CHAR_NOISE: u64 = 4;
    pub const CELL_JITTER: u64 = 5;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    pub cell_w: f64,
    pub cell_h: f64,
    /// Text-centroid displacement as a fraction of the cell half-extent;
    /// 1.0 reaches the edge of the assignment gate.
    pub centroid_jitter: f64,
    /// Detected-cell displacement as a fraction of the cell extent.
    pub cell_jitter: f64,
    pub cell_dropout: f64,
    pub text_dropout: f64,
    pub char_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            cell_w: 120.0,
            cell_h: 40.0,
            centroid_jitter: 0.0,
            cell_jitter: 0.0,
            cell_dropout: 0.0,
            text_dropout: 0.0,
            char_noise: 0.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn new(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("rows and cols must be at least 1".into()));
        }
        if !(self.cell_w > 0.0
            && self.cell_h > 0.0
            && self.cell_w.is_finite()
            && self.cell_h.is_finite())
        {
            return Err(Error::Config("cell size must be positive".into()));
        }
        for (name, p) in [
            ("cell_dropout", self.cell_dropout),
            ("text_dropout", self.text_dropout),
            ("char_noise", self.char_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, j) in [
            ("centroid_jitter", self.centroid_jitter),
            ("cell_jitter", self.cell_jitter),
        ] {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::Config(format!("{name} = {j} must be nonnegative")));
            }
        }
        Ok(())
    }
}

/// Token bookkeeping for one generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SynthStats {
    pub truth_tokens: usize,
    /// Tokens in text boxes that survived text dropout.
    pub retained_tokens: usize,
    /// Retained tokens not touched by character noise.
    pub intact_tokens: usize,
    pub dropped_texts: usize,
    pub dropped_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthInstance {
    pub truth_grid: TableGrid,
    pub truth: TruthDocument,
    pub detections: DetectionDocument,
    pub truth_tables: Vec<BBox>,
    pub stats: SynthStats,
    /// Lattice slot of each emitted text box, in `detections.tables[0].texts` order.
    pub text_slots: Vec<(usize, usize)>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn corrupt(word: &str, p: f64, rng: &mut ChaCha8Rng) -> String {
    word.chars()
        .map(|ch| {
            let hit = rng.gen::<f64>() < p;
            let pick = rng.gen_range(0..NOISE_ALPHABET.len() - 1);
            if !hit {
                return ch;
            }
            // skip the original character so a hit always changes the word
            let mut alphabet = NOISE_ALPHABET
                .iter()
                .map(|&b| b as char)
                .filter(|&c| c != ch);
            alphabet.nth(pick).unwrap_or('x')
        })
        .collect()
}

/// Builds one instance. Deterministic in `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthInstance> {
    cfg.validate()?;
    let mut layout = rng_for(cfg.seed, stream::LAYOUT);
    let mut cell_drop = rng_for(cfg.seed, stream::CELL_DROP);
    let mut text_jitter = rng_for(cfg.seed, stream::TEXT_JITTER);
    let mut text_drop = rng_for(cfg.seed, stream::TEXT_DROP);
    let mut char_noise = rng_for(cfg.seed, stream::CHAR_NOISE);
    let mut cell_jitter = rng_for(cfg.seed, stream::CELL_JITTER);

    let (w, h) = (cfg.cell_w, cfg.cell_h);
    // one cell of margin keeps fully jittered text boxes inside the image
    let (mx, my) = (w, h);
    let image_w = 2.0 * mx + cfg.cols as f64 * w;
    let image_h = 2.0 * my + cfg.rows as f64 * h;
    let table_box = BBox::new(mx, my, mx + cfg.cols as f64 * w, my + cfg.rows as f64 * h)?;
    let class = TABLE_CLASSES[layout.gen_range(0..TABLE_CLASSES.len())];

    let mut truth_rows = vec![vec![String::new(); cfg.cols]; cfg.rows];
    let mut cells = Vec::new();
    let mut texts = Vec::new();
    let mut text_slots = Vec::new();
    let mut stats = SynthStats::default();

    for (r, truth_row) in truth_rows.iter_mut().enumerate() {
        for (c, truth_cell) in truth_row.iter_mut().enumerate() {
            let x1 = mx + c as f64 * w;
            let y1 = my + r as f64 * h;
            let n_words = layout.gen_range(1..=3);
            let words: Vec<&str> = (0..n_words)
                .map(|_| WORDS[layout.gen_range(0..WORDS.len())])
                .collect();
            *truth_cell = words.join(" ");
            stats.truth_tokens += words.len();

            let cdx = cell_jitter.gen_range(-1.0..=1.0) * cfg.cell_jitter * w;
            let cdy = cell_jitter.gen_range(-1.0..=1.0) * cfg.cell_jitter * h;
            if cell_drop.gen::<f64>() < cfg.cell_dropout {
                stats.dropped_cells += 1;
            } else {
                let bbox = BBox::new(x1 + cdx, y1 + cdy, x1 + w + cdx, y1 + h + cdy)?
                    .clamp_to(image_w, image_h);
                cells.push(CellBox::new(bbox, 1.0, class)?);
            }

            let dx = text_jitter.gen_range(-1.0..=1.0) * cfg.centroid_jitter * w / 2.0;
            let dy = text_jitter.gen_range(-1.0..=1.0) * cfg.centroid_jitter * h / 2.0;
            let noisy: Vec<String> = words
                .iter()
                .map(|wd| corrupt(wd, cfg.char_noise, &mut char_noise))
                .collect();
            if text_drop.gen::<f64>() < cfg.text_dropout {
                stats.dropped_texts += 1;
                continue;
            }
            stats.retained_tokens += words.len();
            stats.intact_tokens += words
                .iter()
                .zip(&noisy)
                .filter(|(a, b)| **a == b.as_str())
                .count();
            let (cx, cy) = (x1 + w / 2.0 + dx, y1 + h / 2.0 + dy);
            let (tw, th) = (TEXT_W_FRAC * w / 2.0, TEXT_H_FRAC * h / 2.0);
            let bbox = BBox::new(cx - tw, cy - th, cx + tw, cy + th)?;
            texts.push(TextBox::new(bbox, noisy.join(" "), 1.0)?);
            text_slots.push((r, c));
        }
    }

    let mut class_probs = vec![0.0; TABLE_CLASSES.len() + 1];
    class_probs[class_index(class)] = 1.0;
    let detections = DetectionDocument {
        version: FORMAT_VERSION,
        image_w,
        image_h,
        tables: vec![DetectedTable {
            bbox: table_box,
            class,
            score: 1.0,
            class_probs: Some(class_probs),
            cells,
            texts,
        }],
    };
    let truth_table = TruthTable {
        bbox: table_box,
        class,
        grid: TruthGrid::from_rows(&truth_rows),
    };
    let truth_grid = truth_table.to_grid()?;
    let truth = TruthDocument {
        version: FORMAT_VERSION,
        image_w,
        image_h,
        tables: vec![truth_table],
    };
    Ok(SynthInstance {
        truth_grid,
        truth,
        detections,
        truth_tables: vec![table_box],
        stats,
        text_slots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    /// Paths relative to the manifest's directory.
    pub detections: String,
    pub truth: String,
    pub stats: SynthStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u64,
    pub instances: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn load(path: &Path, strict: bool) -> Result<Parsed<Self>> {
        let name = path.display().to_string();
        let parsed: Parsed<Self> =
            crate::formats::parse_json(&crate::formats::read_file(path)?, &name, strict)?;
        if parsed.value.version != FORMAT_VERSION {
            return Err(Error::Version {
                path: name,
                found: parsed.value.version,
            });
        }
        Ok(parsed)
    }

    /// Resolves an entry's file paths against the manifest location.
    pub fn resolve(manifest_path: &Path, entry: &ManifestEntry) -> (PathBuf, PathBuf) {
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        (dir.join(&entry.detections), dir.join(&entry.truth))
    }
}

/// Synthetic corpus config file: `{"version": 1, "configs": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfigFile {
    pub version: u64,
    pub configs: Vec<SynthConfig>,
}

impl Default for SynthConfigFile {
    fn default() -> Self {
        Self {
            version: FORMAT_VERSION,
            configs: vec![SynthConfig::default()],
        }
    }
}

/// Writes one detection file and one truth file per config plus `manifest.json`.
pub fn corpus(configs: &[SynthConfig], out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut instances = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        let inst = generate(cfg)?;
        let id = format!("instance_{i:04}");
        let detections = format!("{id}.detections.json");
        let truth = format!("{id}.truth.json");
        write_json(&out_dir.join(&detections), &inst.detections)?;
        write_json(&out_dir.join(&truth), &inst.truth)?;
        instances.push(ManifestEntry {
            id,
            seed: cfg.seed,
            detections,
            truth,
            stats: inst.stats,
        });
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        instances,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
