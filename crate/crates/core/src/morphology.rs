//! Binary erosion and dilation with flat, symmetric structuring elements.
//!
//! Positions outside the image read as unset for both operations, so
//! erosion clears a border band and dilation never grows from outside.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage16};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Disk,
    Square,
    Cross,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(Self::Disk),
            "square" => Ok(Self::Square),
            "cross" => Ok(Self::Cross),
            other => Err(Error::InvalidParams(format!("unknown structuring element {other:?}"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Disk => "disk",
            Self::Square => "square",
            Self::Cross => "cross",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuringElement {
    pub shape: Shape,
    pub radius: usize,
}

impl StructuringElement {
    pub fn new(shape: Shape, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidParams("structuring element radius must be >= 1".into()));
        }
        Ok(Self { shape, radius })
    }

    pub fn disk(radius: usize) -> Result<Self> {
        Self::new(Shape::Disk, radius)
    }

    pub fn square(radius: usize) -> Result<Self> {
        Self::new(Shape::Square, radius)
    }

    pub fn cross(radius: usize) -> Result<Self> {
        Self::new(Shape::Cross, radius)
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return false;
        }
        match self.shape {
            Shape::Square => true,
            Shape::Cross => dx == 0 || dy == 0,
            Shape::Disk => dx * dx + dy * dy <= r * r,
        }
    }

    /// Footprint offsets `(dx, dy)` in row-major order.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| self.contains(dx, dy))
            .collect()
    }

    /// Horizontal half-extent of the footprint at each row offset.
    fn row_spans(&self) -> Vec<(isize, usize)> {
        let r = self.radius as isize;
        (-r..=r)
            .map(|dy| {
                let half = (0..=r).rev().find(|&dx| self.contains(dx, dy)).unwrap_or(0);
                (dy, half as usize)
            })
            .collect()
    }
}

/// Bit set where the pixel is at least `threshold`.
pub fn binarize(image: &GrayImage16, threshold: u16) -> BinaryMask {
    let bits = image.pixels().iter().map(|&p| p >= threshold).collect();
    BinaryMask::from_parts(image.width(), image.height(), bits)
}

/// Every footprint neighbor must be set; outside the image counts as unset.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    // run length of set bits ending at each column, per row, lets a row
    // segment test run in O(1)
    let prefix = row_prefix_counts(mask);
    let spans = se.row_spans();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            bits[y * w + x] = spans.iter().all(|&(dy, half)| {
                let yy = y as isize + dy;
                if yy < 0 || yy >= h as isize {
                    return false;
                }
                if x < half || x + half >= w {
                    return false;
                }
                segment_count(&prefix, w, yy as usize, x - half, x + half) == 2 * half + 1
            });
        }
    }
    BinaryMask::from_parts(w, h, bits)
}

/// Any in-image footprint neighbor set.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let prefix = row_prefix_counts(mask);
    let spans = se.row_spans();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            bits[y * w + x] = spans.iter().any(|&(dy, half)| {
                let yy = y as isize + dy;
                if yy < 0 || yy >= h as isize {
                    return false;
                }
                let lo = x.saturating_sub(half);
                let hi = (x + half).min(w - 1);
                segment_count(&prefix, w, yy as usize, lo, hi) > 0
            });
        }
    }
    BinaryMask::from_parts(w, h, bits)
}

/// Erosion followed by dilation with the same element.
pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

fn row_prefix_counts(mask: &BinaryMask) -> Vec<u32> {
    let w = mask.width();
    let mut prefix = vec![0u32; (w + 1) * mask.height()];
    for (y, row) in mask.bits().chunks_exact(w).enumerate() {
        let base = y * (w + 1);
        for (x, &b) in row.iter().enumerate() {
            prefix[base + x + 1] = prefix[base + x] + u32::from(b);
        }
    }
    prefix
}

#[inline]
fn segment_count(prefix: &[u32], w: usize, y: usize, lo: usize, hi: usize) -> usize {
    let base = y * (w + 1);
    (prefix[base + hi + 1] - prefix[base + lo]) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let bits = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        BinaryMask::new(w, h, bits).unwrap()
    }

    #[test]
    fn footprints() {
        assert_eq!(StructuringElement::cross(1).unwrap().offsets().len(), 5);
        assert_eq!(StructuringElement::square(1).unwrap().offsets().len(), 9);
        assert_eq!(StructuringElement::disk(1).unwrap().offsets().len(), 5);
        assert_eq!(StructuringElement::disk(2).unwrap().offsets().len(), 13);
        assert_eq!(StructuringElement::cross(2).unwrap().offsets().len(), 9);
        assert!(StructuringElement::disk(0).is_err());
        for se in [StructuringElement::disk(3).unwrap(), StructuringElement::cross(2).unwrap()] {
            for (dx, dy) in se.offsets() {
                assert!(se.contains(-dx, -dy));
            }
        }
    }

    #[test]
    fn binarize_is_inclusive() {
        let img = GrayImage16::new(3, 1, vec![5, 10, 15]).unwrap();
        assert_eq!(binarize(&img, 10).bits(), &[false, true, true]);
        assert!(binarize(&img, 0).bits().iter().all(|&b| b));
        let img = GrayImage16::new(3, 1, vec![65535, 3, 65535]).unwrap();
        assert_eq!(binarize(&img, 65535).bits(), &[true, false, true]);
    }

    #[test]
    fn isolated_pixel_erodes_away() {
        let m = mask_from(&["...", ".#.", "..."]);
        assert!(erode(&m, &StructuringElement::cross(1).unwrap()).is_empty());
    }

    #[test]
    fn full_mask_loses_border() {
        let m = BinaryMask::full(10, 10).unwrap();
        let e = erode(&m, &StructuringElement::cross(1).unwrap());
        for y in 0..10 {
            for x in 0..10 {
                let interior = (1..9).contains(&x) && (1..9).contains(&y);
                assert_eq!(e.get(x, y), interior, "({x},{y})");
            }
        }
    }

    #[test]
    fn single_pixel_dilates_to_plus() {
        let m = mask_from(&[".....", ".....", "..#..", ".....", "....."]);
        let d = dilate(&m, &StructuringElement::cross(1).unwrap());
        assert_eq!(d, mask_from(&[".....", "..#..", ".###.", "..#..", "....."]));
    }

    #[test]
    fn empty_is_fixed() {
        let m = BinaryMask::empty(7, 5).unwrap();
        for se in [StructuringElement::disk(2).unwrap(), StructuringElement::square(1).unwrap()] {
            assert!(erode(&m, &se).is_empty());
            assert!(dilate(&m, &se).is_empty());
        }
    }

    #[test]
    fn closing_not_extensive_at_border() {
        // outside reads as unset, so a full mask loses its border under closing
        let m = BinaryMask::full(6, 6).unwrap();
        let c = close(&m, &StructuringElement::cross(1).unwrap());
        assert!(!m.is_subset_of(&c));
    }
}
