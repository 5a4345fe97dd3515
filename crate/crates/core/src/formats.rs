//! Version-1 JSON documents exchanged with upstream detectors and evaluators.
//!
//! Boxes are `[x1, y1, x2, y2]` pixel arrays (or `[cx, cy, w, h]` fractions in
//! the set-matching files). Unknown fields are reported back as warnings, or
//! rejected when parsing strictly. Byte-order marks are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{DeserializeOwned, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::eval::{check_class_probs, Prediction, Truth};
use crate::geometry::BBox;
use crate::grid::{check_score, CellBox, CellSource, TableGrid};
use crate::mapping::TextBox;

pub const FORMAT_VERSION: u64 = 1;

/// A parsed document plus the paths of any fields that were ignored.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub ignored: Vec<String>,
}

fn bom_check(bytes: &[u8], path: &str) -> Result<()> {
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        Err(Error::ByteOrderMark {
            path: path.to_string(),
        })
    } else {
        Ok(())
    }
}

/// Parses JSON text, collecting unknown fields. In strict mode the first
/// unknown field is an error.
pub fn parse_json<T: DeserializeOwned>(
    bytes: &[u8],
    path: &str,
    strict: bool,
) -> Result<Parsed<T>> {
    bom_check(bytes, path)?;
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Invalid {
        path: path.to_string(),
        message: format!("not valid UTF-8: {e}"),
    })?;
    let mut ignored = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T =
        serde_ignored::deserialize(&mut de, |p| ignored.push(p.to_string())).map_err(|e| {
            Error::Parse {
                path: path.to_string(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        })?;
    de.end().map_err(|e| Error::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if strict {
        if let Some(field) = ignored.first() {
            return Err(Error::UnknownField {
                path: path.to_string(),
                field: field.clone(),
            });
        }
    }
    Ok(Parsed { value, ignored })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|e| Error::io(path, e))
}

fn check_version(found: u64, path: &str) -> Result<()> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Version {
            path: path.to_string(),
            found,
        })
    }
}

fn invalid(path: &str, message: String) -> Error {
    Error::Invalid {
        path: path.to_string(),
        message,
    }
}

fn check_image(w: f64, h: f64, path: &str) -> Result<()> {
    if w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            path,
            format!("image size {w} x {h} must be positive"),
        ))
    }
}

/// Labels of the table classes in class-probability vectors, in order. The
/// no-object probability follows them.
pub const TABLE_CLASSES: [CellSource; 2] = [CellSource::Bordered, CellSource::Borderless];

pub fn class_index(class: CellSource) -> usize {
    match class {
        CellSource::Bordered => 0,
        CellSource::Borderless => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionDocument {
    pub version: u64,
    pub image_w: f64,
    pub image_h: f64,
    pub tables: Vec<DetectedTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedTable {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class: CellSource,
    pub score: f64,
    /// Optional distribution over `[bordered, borderless, no-object]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_probs: Option<Vec<f64>>,
    pub cells: Vec<CellBox>,
    pub texts: Vec<TextBox>,
}

impl DetectionDocument {
    /// Checks version, dimensions and scores, and clamps every box into the image.
    pub fn validate(&mut self, path: &str) -> Result<()> {
        check_version(self.version, path)?;
        check_image(self.image_w, self.image_h, path)?;
        let (w, h) = (self.image_w, self.image_h);
        for (ti, table) in self.tables.iter_mut().enumerate() {
            let ctx = |what: String| invalid(path, format!("tables[{ti}]{what}"));
            check_score(table.score).map_err(|e| ctx(format!(".score: {e}")))?;
            if let Some(probs) = &table.class_probs {
                if probs.len() != TABLE_CLASSES.len() + 1 {
                    return Err(ctx(format!(
                        ".class_probs: expected {} entries, got {}",
                        TABLE_CLASSES.len() + 1,
                        probs.len()
                    )));
                }
                check_class_probs(probs).map_err(|e| ctx(format!(".class_probs: {e}")))?;
            }
            table.bbox = table.bbox.clamp_to(w, h);
            for (ci, cell) in table.cells.iter_mut().enumerate() {
                check_score(cell.score).map_err(|e| ctx(format!(".cells[{ci}].score: {e}")))?;
                cell.bbox = cell.bbox.clamp_to(w, h);
            }
            for (ki, text) in table.texts.iter_mut().enumerate() {
                check_score(text.score).map_err(|e| ctx(format!(".texts[{ki}].score: {e}")))?;
                text.bbox = text.bbox.clamp_to(w, h);
            }
        }
        Ok(())
    }

    pub fn parse(bytes: &[u8], path: &str, strict: bool) -> Result<Parsed<Self>> {
        let mut parsed: Parsed<Self> = parse_json(bytes, path, strict)?;
        parsed.value.validate(path)?;
        Ok(parsed)
    }

    pub fn load(path: &Path, strict: bool) -> Result<Parsed<Self>> {
        Self::parse(&read_file(path)?, &path.display().to_string(), strict)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthDocument {
    pub version: u64,
    pub image_w: f64,
    pub image_h: f64,
    pub tables: Vec<TruthTable>,
}

fn default_class() -> CellSource {
    CellSource::Bordered
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(default = "default_class")]
    pub class: CellSource,
    pub grid: TruthGrid,
}

/// Complete lattice of cell strings, serialized with `"r,c"` keys in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthGrid {
    pub n_rows: usize,
    pub n_cols: usize,
    #[serde(serialize_with = "ser_cells", deserialize_with = "de_cells")]
    pub cell_texts: BTreeMap<(usize, usize), String>,
}

fn ser_cells<S: Serializer>(
    cells: &BTreeMap<(usize, usize), String>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(cells.len()))?;
    for ((r, c), text) in cells {
        map.serialize_entry(&format!("{r},{c}"), text)?;
    }
    map.end()
}

fn de_cells<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), String>, D::Error> {
    struct CellsVisitor;

    impl<'de> Visitor<'de> for CellsVisitor {
        type Value = BTreeMap<(usize, usize), String>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map keyed by \"row,col\"")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((key, text)) = access.next_entry::<String, String>()? {
                let slot = parse_slot_key(&key).ok_or_else(|| {
                    serde::de::Error::custom(format!("bad cell key `{key}`, expected \"row,col\""))
                })?;
                if out.insert(slot, text).is_some() {
                    return Err(serde::de::Error::custom(format!(
                        "duplicate cell key `{key}`"
                    )));
                }
            }
            Ok(out)
        }
    }

    d.deserialize_map(CellsVisitor)
}

fn parse_slot_key(key: &str) -> Option<(usize, usize)> {
    let (r, c) = key.split_once(',')?;
    Some((r.trim().parse().ok()?, c.trim().parse().ok()?))
}

impl TruthGrid {
    pub fn from_rows(rows: &[Vec<String>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let cell_texts = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(c, t)| ((r, c), t.clone()))
            })
            .collect();
        Self {
            n_rows,
            n_cols,
            cell_texts,
        }
    }

    fn validate(&self, path: &str, ti: usize) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(invalid(path, format!("tables[{ti}].grid: empty lattice")));
        }
        if let Some((r, c)) = self
            .cell_texts
            .keys()
            .find(|(r, c)| *r >= self.n_rows || *c >= self.n_cols)
        {
            return Err(invalid(
                path,
                format!(
                    "tables[{ti}].grid: cell \"{r},{c}\" outside {}x{}",
                    self.n_rows, self.n_cols
                ),
            ));
        }
        if self.cell_texts.len() != self.n_rows * self.n_cols {
            return Err(invalid(
                path,
                format!(
                    "tables[{ti}].grid: {} cells given, lattice needs {}",
                    self.cell_texts.len(),
                    self.n_rows * self.n_cols
                ),
            ));
        }
        Ok(())
    }

    /// Cell strings row-major.
    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.n_rows)
            .map(|r| {
                (0..self.n_cols)
                    .map(|c| self.cell_texts.get(&(r, c)).cloned().unwrap_or_default())
                    .collect()
            })
            .collect()
    }
}

impl TruthTable {
    /// Ground-truth lattice with a uniform partition of the table box.
    pub fn to_grid(&self) -> Result<TableGrid> {
        let mut grid = TableGrid::uniform(self.grid.n_rows, self.grid.n_cols, self.bbox)?;
        for (&(r, c), text) in &self.grid.cell_texts {
            grid.set_text(r, c, text)?;
        }
        Ok(grid)
    }
}

impl TruthDocument {
    pub fn validate(&mut self, path: &str) -> Result<()> {
        check_version(self.version, path)?;
        check_image(self.image_w, self.image_h, path)?;
        let (w, h) = (self.image_w, self.image_h);
        for (ti, table) in self.tables.iter_mut().enumerate() {
            table.grid.validate(path, ti)?;
            table.bbox = table.bbox.clamp_to(w, h);
        }
        Ok(())
    }

    pub fn parse(bytes: &[u8], path: &str, strict: bool) -> Result<Parsed<Self>> {
        let mut parsed: Parsed<Self> = parse_json(bytes, path, strict)?;
        parsed.value.validate(path)?;
        Ok(parsed)
    }

    pub fn load(path: &Path, strict: bool) -> Result<Parsed<Self>> {
        Self::parse(&read_file(path)?, &path.display().to_string(), strict)
    }
}

/// Raw prediction set for the `match` debug surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSetFile {
    pub version: u64,
    pub predictions: Vec<Prediction>,
}

/// Raw truth set for the `match` debug surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSetFile {
    pub version: u64,
    pub truths: Vec<Truth>,
}

impl PredictionSetFile {
    pub fn load(path: &Path, strict: bool) -> Result<Parsed<Self>> {
        let name = path.display().to_string();
        let parsed: Parsed<Self> = parse_json(&read_file(path)?, &name, strict)?;
        check_version(parsed.value.version, &name)?;
        Ok(parsed)
    }
}

impl TruthSetFile {
    pub fn load(path: &Path, strict: bool) -> Result<Parsed<Self>> {
        let name = path.display().to_string();
        let parsed: Parsed<Self> = parse_json(&read_file(path)?, &name, strict)?;
        check_version(parsed.value.version, &name)?;
        Ok(parsed)
    }
}
