//! Axis-aligned box primitives in pixel and normalized coordinates.
//!
//! All coordinates are `f64`; nothing is snapped to integer pixels here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x1, y1, x2, y2]` in pixels.
///
/// Zero-area boxes are allowed. Inverted or non-finite boxes are rejected
/// when the box is built, so every `BBox` in circulation is valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if !(x1.is_finite() && y1.is_finite() && x2.is_finite() && y2.is_finite()) {
            return Err(Error::NonFinite { x1, y1, x2, y2 });
        }
        if x1 > x2 || y1 > y2 {
            return Err(Error::InvertedBox { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Builds a box from values already known to be ordered and finite.
    pub(crate) fn from_ordered(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        debug_assert!(x1 <= x2 && y1 <= y2, "unordered box {x1} {y1} {x2} {y2}");
        Self { x1, y1, x2, y2 }
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Midpoint of the box.
    pub fn centroid(&self) -> Point {
        Point {
            x: (self.x1 + self.x2) / 2.0,
            y: (self.y1 + self.y2) / 2.0,
        }
    }

    /// Smallest box containing both.
    pub fn union_hull(&self, other: &BBox) -> BBox {
        BBox::from_ordered(
            self.x1.min(other.x1),
            self.y1.min(other.y1),
            self.x2.max(other.x2),
            self.y2.max(other.y2),
        )
    }

    /// Closed-interval overlap test; touching edges count as intersecting.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.x1 <= other.x2 && other.x1 <= self.x2 && self.y1 <= other.y2 && other.y1 <= self.y2
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        w * h
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<BBox> {
        BBox::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn scale(&self, s: f64) -> Result<BBox> {
        BBox::new(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)
    }

    /// Clamps every coordinate into `[0, w] x [0, h]`.
    pub fn clamp_to(&self, w: f64, h: f64) -> BBox {
        BBox::from_ordered(
            self.x1.clamp(0.0, w),
            self.y1.clamp(0.0, h),
            self.x2.clamp(0.0, w),
            self.y2.clamp(0.0, h),
        )
    }

    /// Clamps every coordinate into `bounds`.
    pub fn clamp_within(&self, bounds: &BBox) -> BBox {
        BBox::from_ordered(
            self.x1.clamp(bounds.x1, bounds.x2),
            self.y1.clamp(bounds.y1, bounds.y2),
            self.x2.clamp(bounds.x1, bounds.x2),
            self.y2.clamp(bounds.y1, bounds.y2),
        )
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.corners()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Box as `(cx, cy, w, h)`, each a fraction of the image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct NormBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

impl NormBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        for (name, value) in [("cx", cx), ("cy", cy), ("w", w), ("h", h)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::NormBoxRange { name, value });
            }
        }
        Ok(Self { cx, cy, w, h })
    }

    /// Normalizes a pixel box against the image size, clamping it into the image first.
    pub fn from_corner(b: &BBox, img_w: f64, img_h: f64) -> Result<Self> {
        check_image(img_w, img_h)?;
        let b = b.clamp_to(img_w, img_h);
        let c = b.centroid();
        Ok(Self {
            cx: (c.x / img_w).clamp(0.0, 1.0),
            cy: (c.y / img_h).clamp(0.0, 1.0),
            w: (b.width() / img_w).clamp(0.0, 1.0),
            h: (b.height() / img_h).clamp(0.0, 1.0),
        })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn components(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    /// Sum of absolute component differences.
    pub fn l1_distance(&self, other: &NormBox) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl TryFrom<[f64; 4]> for NormBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        NormBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<NormBox> for [f64; 4] {
    fn from(b: NormBox) -> Self {
        b.components()
    }
}

fn check_image(img_w: f64, img_h: f64) -> Result<()> {
    if img_w > 0.0 && img_h > 0.0 && img_w.is_finite() && img_h.is_finite() {
        Ok(())
    } else {
        Err(Error::ImageSize {
            width: img_w,
            height: img_h,
        })
    }
}

pub fn centroid(b: &BBox) -> Point {
    b.centroid()
}

/// Intersection over union. Two zero-area boxes score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Generalized IoU: `IoU - |C \ (A ∪ B)| / |C|` with `C` the enclosing hull.
pub fn giou(a: &BBox, b: &BBox) -> Result<f64> {
    if a.area() <= 0.0 && b.area() <= 0.0 {
        return Err(Error::DegeneratePair);
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    let hull = a.union_hull(b).area();
    let iou = if union > 0.0 { inter / union } else { 0.0 };
    Ok(iou - (hull - union) / hull)
}

/// Converts a normalized box into pixel corners, clamped to the image.
pub fn to_corner(nb: &NormBox, img_w: f64, img_h: f64) -> Result<BBox> {
    check_image(img_w, img_h)?;
    let x1 = (nb.cx - nb.w / 2.0) * img_w;
    let y1 = (nb.cy - nb.h / 2.0) * img_h;
    let x2 = (nb.cx + nb.w / 2.0) * img_w;
    let y2 = (nb.cy + nb.h / 2.0) * img_h;
    Ok(BBox::from_ordered(x1, y1, x2, y2).clamp_to(img_w, img_h))
}

/// Weights of the two box-loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxLossWeights {
    pub lambda_iou: f64,
    pub lambda_l1: f64,
}

impl Default for BoxLossWeights {
    fn default() -> Self {
        Self {
            lambda_iou: 2.0,
            lambda_l1: 5.0,
        }
    }
}

impl BoxLossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda_iou", self.lambda_iou),
            ("lambda_l1", self.lambda_l1),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::NegativeWeight { name, value });
            }
        }
        Ok(())
    }
}

/// Raw box-loss terms before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxTerms {
    pub l1: f64,
    pub giou_loss: f64,
}

impl BoxTerms {
    pub fn weighted(&self, w: BoxLossWeights) -> f64 {
        w.lambda_iou * self.giou_loss + w.lambda_l1 * self.l1
    }
}

pub(crate) fn box_terms(a: &NormBox, b: &NormBox) -> Result<BoxTerms> {
    let ca = to_corner(a, 1.0, 1.0)?;
    let cb = to_corner(b, 1.0, 1.0)?;
    Ok(BoxTerms {
        l1: a.l1_distance(b),
        giou_loss: 1.0 - giou(&ca, &cb)?,
    })
}

/// `lambda_iou * (1 - GIoU(a, b)) + lambda_l1 * |a - b|_1`, GIoU taken in corner form.
pub fn l_box(a: &NormBox, b: &NormBox, lambda_iou: f64, lambda_l1: f64) -> Result<f64> {
    let w = BoxLossWeights {
        lambda_iou,
        lambda_l1,
    };
    w.validate()?;
    Ok(box_terms(a, b)?.weighted(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn nb(cx: f64, cy: f64, w: f64, h: f64) -> NormBox {
        NormBox::new(cx, cy, w, h).unwrap()
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&bb(0.0, 0.0, 1.0, 1.0)), Point { x: 0.5, y: 0.5 });
        assert_eq!(
            centroid(&bb(10.0, 20.0, 10.0, 20.0)),
            Point { x: 10.0, y: 20.0 }
        );
        assert_eq!(centroid(&bb(3.0, 7.0, 11.0, 9.0)), Point { x: 7.0, y: 8.0 });
    }

    #[test]
    fn rejects_inverted_and_nan() {
        assert!(matches!(
            BBox::new(2.0, 0.0, 1.0, 1.0),
            Err(Error::InvertedBox { .. })
        ));
        assert!(matches!(
            BBox::new(0.0, f64::NAN, 1.0, 1.0),
            Err(Error::NonFinite { .. })
        ));
        assert!(serde_json::from_str::<BBox>("[0, 5, 1, 4]").is_err());
        assert!(NormBox::new(0.5, 0.5, 1.2, 0.1).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&bb(0.0, 0.0, 1.0, 1.0), &bb(5.0, 5.0, 6.0, 6.0)), 0.0);
        assert!((iou(&a, &bb(1.0, 0.0, 3.0, 2.0)) - 1.0 / 3.0).abs() < 1e-12);
        let p = bb(1.0, 1.0, 1.0, 1.0);
        assert_eq!(iou(&p, &p), 0.0);
    }

    #[test]
    fn giou_examples() {
        let a = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(giou(&a, &a).unwrap(), 1.0);
        let g = giou(&bb(0.0, 0.0, 1.0, 1.0), &bb(2.0, 0.0, 3.0, 1.0)).unwrap();
        assert!((g + 1.0 / 3.0).abs() < 1e-12);
        let g = giou(&a, &bb(1.0, 0.0, 3.0, 2.0)).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-12);
        let p = bb(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(giou(&p, &p), Err(Error::DegeneratePair)));
    }

    #[test]
    fn giou_equals_iou_under_containment() {
        let outer = bb(0.0, 0.0, 10.0, 10.0);
        let inner = bb(2.0, 3.0, 5.0, 7.0);
        assert!((giou(&outer, &inner).unwrap() - iou(&outer, &inner)).abs() < 1e-15);
    }

    #[test]
    fn to_corner_examples() {
        assert_eq!(
            to_corner(&nb(0.5, 0.5, 1.0, 1.0), 100.0, 50.0).unwrap(),
            bb(0.0, 0.0, 100.0, 50.0)
        );
        assert_eq!(
            to_corner(&nb(0.5, 0.5, 0.0, 0.0), 100.0, 50.0).unwrap(),
            bb(50.0, 25.0, 50.0, 25.0)
        );
        assert_eq!(
            to_corner(&nb(0.25, 0.5, 0.5, 0.5), 200.0, 100.0).unwrap(),
            bb(0.0, 25.0, 100.0, 75.0)
        );
        assert!(to_corner(&nb(0.5, 0.5, 1.0, 1.0), 0.0, 10.0).is_err());
    }

    #[test]
    fn to_corner_clamps_overhang() {
        let c = to_corner(&nb(0.1, 0.5, 0.5, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(c.x1(), 0.0);
        assert!((c.x2() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn normalization_round_trip() {
        let b = bb(12.5, 40.0, 88.0, 61.25);
        let n = NormBox::from_corner(&b, 200.0, 100.0).unwrap();
        let back = to_corner(&n, 200.0, 100.0).unwrap();
        for (u, v) in b.corners().iter().zip(back.corners()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn l_box_identity_and_zero_weights() {
        let a = nb(0.3, 0.4, 0.2, 0.1);
        let b = nb(0.6, 0.5, 0.3, 0.2);
        assert_eq!(l_box(&a, &a, 2.0, 5.0).unwrap(), 0.0);
        assert_eq!(l_box(&a, &b, 0.0, 0.0).unwrap(), 0.0);
        assert!(l_box(&a, &b, -1.0, 0.0).is_err());
    }

    #[test]
    fn l_box_adjacent_halves() {
        // Corner forms [0,0,0.5,1] and [0.5,0,1,1]: IoU 0, hull equals union, so GIoU 0.
        let a = nb(0.25, 0.5, 0.5, 1.0);
        let b = nb(0.75, 0.5, 0.5, 1.0);
        let ca = to_corner(&a, 1.0, 1.0).unwrap();
        let cb = to_corner(&b, 1.0, 1.0).unwrap();
        assert_eq!(ca, bb(0.0, 0.0, 0.5, 1.0));
        assert_eq!(cb, bb(0.5, 0.0, 1.0, 1.0));
        let v = l_box(&a, &b, 1.0, 1.0).unwrap();
        assert!((v - 1.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn l_box_overlapping_thirds() {
        // The (0,0,2,2) / (1,0,3,2) pair scaled into the unit square by 1/3 horizontally.
        let a = nb(1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0);
        let b = nb(2.0 / 3.0, 0.5, 2.0 / 3.0, 1.0);
        let v = l_box(&a, &b, 1.0, 1.0).unwrap();
        // (1 - 1/3) + 1/3
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}
