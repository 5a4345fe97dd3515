//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tabgrid::{BBox, NormBox, Prediction, TableGrid, TextBox, Truth};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Brute-force gate: every (text, cell) pair is tested, passing pairs are
/// collected and the smallest `(distance, row, col)` wins.
pub fn gate_oracle(
    grid: &TableGrid,
    texts: &[TextBox],
    literal: bool,
) -> Vec<Option<(usize, usize)>> {
    texts
        .iter()
        .map(|t| {
            let b = t.bbox.corners();
            let (px, py) = ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0);
            let mut candidates = Vec::new();
            for r in 0..grid.n_rows() {
                for c in 0..grid.n_cols() {
                    let cb = grid.get(r, c).unwrap().bbox.corners();
                    let (cx, cy) = ((cb[0] + cb[2]) / 2.0, (cb[1] + cb[3]) / 2.0);
                    let half_w = (cb[2] - cb[0]) / 2.0;
                    let half_h = if literal {
                        half_w
                    } else {
                        (cb[3] - cb[1]) / 2.0
                    };
                    if (px - cx).abs() <= half_w && (py - cy).abs() <= half_h {
                        candidates.push(((px - cx).hypot(py - cy), r, c));
                    }
                }
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            candidates.first().map(|&(_, r, c)| (r, c))
        })
        .collect()
}

/// Expected cell contents given oracle slots: texts sorted by full key.
pub fn contents_oracle(
    grid: &TableGrid,
    texts: &[TextBox],
    slots: &[Option<(usize, usize)>],
) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new(); grid.n_rows() * grid.n_cols()];
    let mut keyed: Vec<(f64, f64, &str, usize, usize)> = slots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.map(|(r, c)| {
                let t = &texts[i];
                (
                    t.bbox.y1(),
                    t.bbox.x1(),
                    t.text.as_str(),
                    i,
                    r * grid.n_cols() + c,
                )
            })
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(b.2))
            .then(a.3.cmp(&b.3))
    });
    for (_, _, text, _, slot) in keyed {
        out[slot].push(text.trim().to_string());
    }
    out
}

/// GIoU in unit-square corner form, written out from first principles.
pub fn giou_unit(a: [f64; 4], b: [f64; 4]) -> f64 {
    let corners = |v: [f64; 4]| {
        [
            (v[0] - v[2] / 2.0).clamp(0.0, 1.0),
            (v[1] - v[3] / 2.0).clamp(0.0, 1.0),
            (v[0] + v[2] / 2.0).clamp(0.0, 1.0),
            (v[1] + v[3] / 2.0).clamp(0.0, 1.0),
        ]
    };
    let (p, q) = (corners(a), corners(b));
    let area = |r: [f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    let iw = (p[2].min(q[2]) - p[0].max(q[0])).max(0.0);
    let ih = (p[3].min(q[3]) - p[1].max(q[1])).max(0.0);
    let inter = iw * ih;
    let union = area(p) + area(q) - inter;
    let hull = (p[2].max(q[2]) - p[0].min(q[0])) * (p[3].max(q[3]) - p[1].min(q[1]));
    inter / union - (hull - union) / hull
}

pub fn pair_cost_oracle(pred: &Prediction, truth: &Truth, lambda_iou: f64, lambda_l1: f64) -> f64 {
    let p = pred.class_probs[truth.class_id].max(1e-12);
    let a = pred.bbox.components();
    let b = truth.bbox.components();
    let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    -p.ln() + lambda_iou * (1.0 - giou_unit(a, b)) + lambda_l1 * l1
}

/// Minimum total cost over every injective truth -> prediction map.
pub fn exhaustive_min(cost: &[Vec<f64>]) -> f64 {
    fn rec(cost: &[Vec<f64>], t: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if t == cost.len() {
            *best = best.min(acc);
            return;
        }
        for p in 0..used.len() {
            if !used[p] {
                used[p] = true;
                rec(cost, t + 1, used, acc + cost[t][p], best);
                used[p] = false;
            }
        }
    }
    let n_preds = cost.first().map_or(0, Vec::len);
    let mut best = f64::INFINITY;
    rec(cost, 0, &mut vec![false; n_preds], 0.0, &mut best);
    if cost.is_empty() {
        0.0
    } else {
        best
    }
}

pub fn random_normbox(rng: &mut ChaCha8Rng) -> NormBox {
    let cx: f64 = rng.gen_range(0.05..0.95);
    let cy: f64 = rng.gen_range(0.05..0.95);
    let w = rng.gen_range(0.01..=2.0 * cx.min(1.0 - cx));
    let h = rng.gen_range(0.01..=2.0 * cy.min(1.0 - cy));
    NormBox::new(cx, cy, w, h).unwrap()
}

pub fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

pub fn random_bbox(rng: &mut ChaCha8Rng, extent: f64) -> BBox {
    let x1 = rng.gen_range(0.0..extent);
    let y1 = rng.gen_range(0.0..extent);
    // occasional zero width or height
    let w = if rng.gen_bool(0.05) {
        0.0
    } else {
        rng.gen_range(0.0..extent)
    };
    let h = if rng.gen_bool(0.05) {
        0.0
    } else {
        rng.gen_range(0.0..extent)
    };
    BBox::new(x1, y1, x1 + w, y1 + h).unwrap()
}

/// Runs the CLI in-process; returns (exit code, stdout, stderr).
pub fn cli<S: AsRef<str>>(args: &[S]) -> (i32, String, String) {
    let mut argv = vec!["tabgrid".to_string()];
    argv.extend(args.iter().map(|a| a.as_ref().to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tabgrid::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Every file under `dir` (non-recursive) as sorted (name, bytes).
pub fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
