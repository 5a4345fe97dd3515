//! Scoring predictions against ground truth.
//!
//! * set matching: optimal bipartite matching of a fixed-size prediction set
//!   against the truth objects, with class NLL plus box loss as pair cost,
//!   and the Hungarian loss over the matched set;
//! * detection IoU over table regions;
//! * word-level accuracy `100 * X / Y` and a row-level variant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{box_terms, iou, BBox, BoxLossWeights, NormBox};
use crate::grid::TableGrid;
use crate::lsap;

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

const PROB_SUM_TOL: f64 = 1e-6;

/// One element of the prediction set. The last entry of `class_probs` is the
/// no-object class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrediction")]
pub struct Prediction {
    pub class_probs: Vec<f64>,
    #[serde(rename = "box")]
    pub bbox: NormBox,
}

#[derive(Deserialize)]
struct RawPrediction {
    class_probs: Vec<f64>,
    #[serde(rename = "box")]
    bbox: NormBox,
}

impl TryFrom<RawPrediction> for Prediction {
    type Error = Error;

    fn try_from(raw: RawPrediction) -> Result<Self> {
        Prediction::new(raw.class_probs, raw.bbox)
    }
}

impl Prediction {
    pub fn new(class_probs: Vec<f64>, bbox: NormBox) -> Result<Self> {
        check_class_probs(&class_probs)?;
        Ok(Self { class_probs, bbox })
    }

    /// Number of real classes (excluding no-object).
    pub fn n_classes(&self) -> usize {
        self.class_probs.len() - 1
    }

    pub fn no_object_prob(&self) -> f64 {
        self.class_probs[self.n_classes()]
    }
}

/// A class distribution needs at least one class plus no-object, nonnegative
/// entries, and a sum of 1 within `1e-6`.
pub fn check_class_probs(class_probs: &[f64]) -> Result<()> {
    if class_probs.len() < 2 {
        return Err(Error::ClassProbs(format!(
            "need at least one class plus no-object, got {} entries",
            class_probs.len()
        )));
    }
    if let Some(p) = class_probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::ClassProbs(format!(
            "probability {p} is not a finite nonnegative number"
        )));
    }
    let sum: f64 = class_probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::ClassProbs(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub class_id: usize,
    #[serde(rename = "box")]
    pub bbox: NormBox,
}

fn nll(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerms {
    pub truth: usize,
    pub prediction: usize,
    pub l1: f64,
    pub giou_loss: f64,
    pub class_nll: f64,
    /// `class_nll + lambda_iou * giou_loss + lambda_l1 * l1`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `assignment[i]` is the prediction matched to truth `i`.
    pub assignment: Vec<usize>,
    pub total_cost: f64,
    pub loss: f64,
    pub per_pair: Vec<PairTerms>,
    /// Predictions left unmatched, each scored against no-object.
    pub unmatched: Vec<usize>,
    pub no_object_nll: f64,
}

fn check_classes(preds: &[Prediction], truths: &[Truth]) -> Result<usize> {
    let n_classes = preds.first().map_or(0, Prediction::n_classes);
    if let Some(p) = preds.iter().find(|p| p.n_classes() != n_classes) {
        return Err(Error::ClassProbs(format!(
            "mixed class counts in prediction set: {} vs {}",
            p.n_classes(),
            n_classes
        )));
    }
    if let Some(t) = truths.iter().find(|t| t.class_id >= n_classes) {
        return Err(Error::ClassId {
            class_id: t.class_id,
            n_classes,
        });
    }
    Ok(n_classes)
}

/// Pair cost between truth `t` and prediction `p`.
pub fn pair_terms(
    t: &Truth,
    ti: usize,
    p: &Prediction,
    pi: usize,
    weights: BoxLossWeights,
) -> Result<PairTerms> {
    let terms = box_terms(&t.bbox, &p.bbox)?;
    let class_nll = nll(p.class_probs[t.class_id]);
    Ok(PairTerms {
        truth: ti,
        prediction: pi,
        l1: terms.l1,
        giou_loss: terms.giou_loss,
        class_nll,
        cost: class_nll + terms.weighted(weights),
    })
}

/// Full `|truths| x S` pair-cost matrix.
pub fn cost_matrix(
    preds: &[Prediction],
    truths: &[Truth],
    weights: BoxLossWeights,
) -> Result<Vec<Vec<f64>>> {
    truths
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            preds
                .iter()
                .enumerate()
                .map(|(pi, p)| pair_terms(t, ti, p, pi, weights).map(|x| x.cost))
                .collect()
        })
        .collect()
}

/// Optimal matching of truths to predictions plus the Hungarian loss.
pub fn match_sets(
    preds: &[Prediction],
    truths: &[Truth],
    weights: BoxLossWeights,
) -> Result<MatchReport> {
    weights.validate()?;
    if preds.len() < truths.len() {
        return Err(Error::SetSize {
            preds: preds.len(),
            truths: truths.len(),
        });
    }
    check_classes(preds, truths)?;

    let costs = cost_matrix(preds, truths, weights)?;
    let assignment: Vec<usize> = lsap::solve(&costs)
        .into_iter()
        .map(|j| j.expect("every truth is matched when S >= |truths|"))
        .collect();

    let mut per_pair = Vec::with_capacity(truths.len());
    for (ti, &pi) in assignment.iter().enumerate() {
        per_pair.push(pair_terms(&truths[ti], ti, &preds[pi], pi, weights)?);
    }
    let total_cost: f64 = per_pair.iter().map(|p| p.cost).sum();

    let mut matched = vec![false; preds.len()];
    for &pi in &assignment {
        matched[pi] = true;
    }
    let unmatched: Vec<usize> = (0..preds.len()).filter(|&i| !matched[i]).collect();
    let no_object_nll: f64 = unmatched
        .iter()
        .map(|&i| nll(preds[i].no_object_prob()))
        .sum();

    Ok(MatchReport {
        assignment,
        total_cost,
        loss: total_cost + no_object_nll,
        per_pair,
        unmatched,
        no_object_nll,
    })
}

/// Matched-word tally: `x` correct out of `y` ground-truth words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WordCounts {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "Y")]
    pub y: usize,
}

impl WordCounts {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// `100 * x / y`; 100 when there is nothing to recognize.
    pub fn accuracy(&self) -> f64 {
        if self.y == 0 {
            if self.x == 0 {
                100.0
            } else {
                0.0
            }
        } else {
            self.x as f64 / self.y as f64 * 100.0
        }
    }

    /// Accuracy rounded half away from zero to a whole percent.
    pub fn accuracy_rounded(&self) -> u32 {
        self.accuracy().round() as u32
    }
}

impl std::ops::Add for WordCounts {
    type Output = WordCounts;

    fn add(self, rhs: Self) -> Self {
        WordCounts::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::AddAssign for WordCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for WordCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(WordCounts::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WordAccMode {
    /// Words count only when they appear in the same `(row, col)` cell.
    #[default]
    Positional,
    /// Words count anywhere in the table.
    Bag,
}

fn bag<'a>(tokens: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

fn multiset_intersection(a: &BTreeMap<&str, usize>, b: &BTreeMap<&str, usize>) -> usize {
    a.iter()
        .map(|(k, n)| b.get(k).map_or(0, |m| (*n).min(*m)))
        .sum()
}

fn cell_tokens(grid: &TableGrid, row: usize, col: usize) -> Vec<&str> {
    grid.get(row, col)
        .map(|c| {
            c.contents
                .iter()
                .flat_map(|s| s.split_whitespace())
                .collect()
        })
        .unwrap_or_default()
}

fn all_tokens(grid: &TableGrid) -> impl Iterator<Item = &str> {
    grid.cells()
        .iter()
        .flat_map(|c| c.contents.iter().flat_map(|s| s.split_whitespace()))
}

/// Word-level tally of `pred` against `truth`. Cell contents are split on
/// whitespace and matched as multisets.
pub fn word_accuracy(pred: &TableGrid, truth: &TableGrid, mode: WordAccMode) -> Result<WordCounts> {
    let y = all_tokens(truth).count();
    let x = match mode {
        WordAccMode::Positional => {
            if pred.shape() != truth.shape() {
                return Err(shape_mismatch(pred, truth));
            }
            truth
                .iter()
                .map(|(r, c, _)| {
                    let p = bag(cell_tokens(pred, r, c).into_iter());
                    let t = bag(cell_tokens(truth, r, c).into_iter());
                    multiset_intersection(&t, &p)
                })
                .sum()
        }
        WordAccMode::Bag => multiset_intersection(&bag(all_tokens(truth)), &bag(all_tokens(pred))),
    };
    Ok(WordCounts::new(x, y))
}

/// Counts truth rows reproduced exactly: row `r` of the prediction exists, has
/// the same number of cells, and every cell's token sequence matches.
pub fn row_accuracy(pred: &TableGrid, truth: &TableGrid) -> WordCounts {
    let y = truth.n_rows();
    let x = if pred.n_cols() != truth.n_cols() {
        0
    } else {
        (0..truth.n_rows().min(pred.n_rows()))
            .filter(|&r| {
                (0..truth.n_cols()).all(|c| cell_tokens(pred, r, c) == cell_tokens(truth, r, c))
            })
            .count()
    };
    WordCounts::new(x, y)
}

fn shape_mismatch(pred: &TableGrid, truth: &TableGrid) -> Error {
    Error::ShapeMismatch {
        pred_rows: pred.n_rows(),
        pred_cols: pred.n_cols(),
        truth_rows: truth.n_rows(),
        truth_cols: truth.n_cols(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionIou {
    /// IoU of each truth with its matched prediction (0 when unmatched).
    pub per_table: Vec<f64>,
    pub mean: f64,
    /// Prediction index paired with each truth.
    pub pairs: Vec<Option<usize>>,
}

/// Pairs truth tables with predicted tables by minimum total `1 - IoU` and
/// reports the per-truth IoU. Pairs with zero overlap count as unmatched.
pub fn detection_iou(preds: &[BBox], truths: &[BBox]) -> DetectionIou {
    if truths.is_empty() {
        let mean = if preds.is_empty() { 1.0 } else { 0.0 };
        return DetectionIou {
            per_table: Vec::new(),
            mean,
            pairs: Vec::new(),
        };
    }
    let ious: Vec<Vec<f64>> = truths
        .iter()
        .map(|t| preds.iter().map(|p| iou(t, p)).collect())
        .collect();
    let costs: Vec<Vec<f64>> = ious
        .iter()
        .map(|row| row.iter().map(|v| 1.0 - v).collect())
        .collect();
    let pairs: Vec<Option<usize>> = if preds.is_empty() {
        vec![None; truths.len()]
    } else {
        lsap::solve(&costs)
            .into_iter()
            .enumerate()
            .map(|(ti, pj)| pj.filter(|&pj| ious[ti][pj] > 0.0))
            .collect()
    };
    let per_table: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(ti, pj)| pj.map_or(0.0, |pj| ious[ti][pj]))
        .collect();
    let mean = per_table.iter().sum::<f64>() / per_table.len() as f64;
    DetectionIou {
        per_table,
        mean,
        pairs,
    }
}
