//! Axis-aligned bounding boxes and the IoU-derived motion level.

use crate::error::{Error, Result};

/// Axis-aligned box in pixel units, top-left + width/height (MOT file convention).
///
/// Rectangles are half-open: a box covers `[x, x+w) x [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-positive extents and non-finite values.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::InvalidBox {
                reason: format!("non-finite value in ({x},{y},{w},{h})"),
            });
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox {
                reason: format!("width and height must be positive, got w={w}, h={h}"),
            });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

/// Intersection over union of two boxes. Symmetric, 1 for identical boxes,
/// 0 for disjoint ones. Clamped to [0, 1]: the union subtraction can round
/// a hair below the intersection for near-identical boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    (inter / union).min(1.0)
}

/// Motion level of an object observed at `prev` then `cur`: `1 - iou(prev, cur)`.
///
/// New tracks without a previous observation are assigned level 1 by the caller.
pub fn motion_level(prev: &BoundingBox, cur: &BoundingBox) -> f64 {
    1.0 - iou(prev, cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn iou_identical_is_one() {
        let b = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&b, &b), 1.0);
    }

    #[test]
    fn iou_disjoint_is_zero() {
        assert_eq!(iou(&bx(0.0, 0.0, 1.0, 1.0), &bx(5.0, 5.0, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn iou_overlap_one_seventh() {
        // inter = 1, union = 4 + 4 - 1 = 7
        let a = bx(0.0, 0.0, 2.0, 2.0);
        let b = bx(1.0, 1.0, 2.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
        assert!((motion_level(&a, &b) - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn motion_level_identical_is_zero() {
        let b = bx(3.0, 4.0, 5.0, 6.0);
        assert_eq!(motion_level(&b, &b), 0.0);
    }

    #[test]
    fn motion_level_complements_iou_exactly() {
        let a = bx(0.0, 0.0, 3.0, 2.0);
        let b = bx(1.0, 0.5, 2.0, 2.0);
        assert_eq!(motion_level(&a, &b) + iou(&a, &b), 1.0);
    }

    #[test]
    fn degenerate_boxes_rejected() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -2.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }
}
