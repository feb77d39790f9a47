//! Raster containers shared by every pipeline stage.
//!
//! All three rasters are row-major and immutable once built; constructors
//! validate the shape so downstream code can index without re-checking.

use crate::error::{Error, Result};

/// A width × height raster of 16-bit intensities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage16 {
    width: usize,
    height: usize,
    pixels: Vec<u16>,
}

impl GrayImage16 {
    pub fn new(width: usize, height: usize, pixels: Vec<u16>) -> Result<Self> {
        check_shape(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Result<Self> {
        let len = checked_len(width, height)?;
        Self::new(width, height, vec![value; len])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u16) -> Result<Self> {
        checked_len(width, height)?;
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub fn max_value(&self) -> u16 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| f64::from(p)).collect(),
        }
    }

    /// Keeps intensities where `mask` is set and zeroes the rest.
    pub fn masked(&self, mask: &BinaryMask) -> Result<Self> {
        ensure_same_shape(self.width, self.height, mask.width(), mask.height())?;
        let pixels = self
            .pixels
            .iter()
            .zip(mask.bits())
            .map(|(&p, &m)| if m { p } else { 0 })
            .collect();
        Self::new(self.width, self.height, pixels)
    }

    pub fn transposed(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let pixels = (0..w)
            .flat_map(|x| (0..h).map(move |y| (x, y)))
            .map(|(x, y)| self.pixels[y * w + x])
            .collect();
        Self { width: h, height: w, pixels }
    }
}

/// Real-valued raster used inside diffusion and bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(width, height, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!("non-finite value at index {i}")));
        }
        Ok(Self { width, height, values })
    }

    /// Skips the finiteness scan; callers guarantee finite values.
    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Rounds half away from zero and clamps to the 16-bit range.
    pub fn to_gray16(&self) -> GrayImage16 {
        let pixels = self
            .values
            .iter()
            .map(|&v| v.round().clamp(0.0, 65535.0) as u16)
            .collect();
        GrayImage16 { width: self.width, height: self.height, pixels }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Per-pixel boolean raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_shape(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let len = checked_len(width, height)?;
        Self::new(width, height, vec![false; len])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        let len = checked_len(width, height)?;
        Self::new(width, height, vec![true; len])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        checked_len(width, height)?;
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, bits)
    }

    pub(crate) fn from_parts(width: usize, height: usize, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), width * height);
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self::from_parts(self.width, self.height, self.bits.iter().map(|b| !b).collect())
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    /// `true` when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// 0 / 65535 intensity encoding used when a mask is written to disk.
    pub fn to_gray16(&self) -> GrayImage16 {
        let pixels = self.bits.iter().map(|&b| if b { u16::MAX } else { 0 }).collect();
        GrayImage16 { width: self.width, height: self.height, pixels }
    }

    /// Inverse of [`BinaryMask::to_gray16`]; any non-zero pixel is set.
    pub fn from_gray16(image: &GrayImage16) -> Self {
        let bits = image.pixels().iter().map(|&p| p != 0).collect();
        Self::from_parts(image.width(), image.height(), bits)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        ensure_same_shape(self.width, self.height, other.width, other.height)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_parts(self.width, self.height, bits))
    }
}

/// Summary statistics over every pixel of an image.
///
/// `std` is the population standard deviation (divides by N), which keeps
/// single-pixel images well defined.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ImageStats {
    pub mean: f64,
    pub std: f64,
    pub min: u16,
    pub max: u16,
}

pub fn image_stats(image: &GrayImage16) -> ImageStats {
    let n = image.len() as f64;
    let (mut min, mut max, mut sum) = (u16::MAX, 0u16, 0u64);
    for &p in image.pixels() {
        min = min.min(p);
        max = max.max(p);
        sum += u64::from(p);
    }
    let mean = sum as f64 / n;
    let std = if min == max {
        0.0
    } else {
        let ss: f64 = image
            .pixels()
            .iter()
            .map(|&p| {
                let d = f64::from(p) - mean;
                d * d
            })
            .sum();
        (ss / n).sqrt()
    };
    // the division can land a hair outside [min, max] for near-constant images
    let mean = mean.clamp(f64::from(min), f64::from(max));
    ImageStats { mean, std, min, max }
}

pub(crate) fn ensure_same_shape(w0: usize, h0: usize, w1: usize, h1: usize) -> Result<()> {
    if (w0, h0) != (w1, h1) {
        return Err(Error::ShapeMismatch { expected: (w0, h0), found: (w1, h1) });
    }
    Ok(())
}

fn checked_len(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!("dimensions must be positive, got {width}x{height}")));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::InvalidImage(format!("dimensions {width}x{height} overflow")))
}

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    let expected = checked_len(width, height)?;
    if expected != len {
        return Err(Error::InvalidImage(format!(
            "{width}x{height} image needs {expected} samples, got {len}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_image_has_zero_std() {
        let img = GrayImage16::filled(3, 4, 7).unwrap();
        let s = image_stats(&img);
        assert_eq!(s.mean, 7.0);
        assert_eq!(s.std, 0.0);
        assert_eq!((s.min, s.max), (7, 7));
    }

    #[test]
    fn four_pixel_stats() {
        let img = GrayImage16::new(2, 2, vec![100, 200, 300, 400]).unwrap();
        let s = image_stats(&img);
        assert_eq!(s.mean, 250.0);
        let by_hand = ((150f64.powi(2) + 50f64.powi(2) * 2.0 + 150f64.powi(2)) / 4.0).sqrt();
        assert_relative_eq!(s.std, by_hand, max_relative = 1e-12);
        assert_relative_eq!(s.std, 111.803, epsilon = 1e-3);
    }

    #[test]
    fn single_pixel() {
        let s = image_stats(&GrayImage16::new(1, 1, vec![4242]).unwrap());
        assert_eq!((s.mean, s.std, s.min, s.max), (4242.0, 0.0, 4242, 4242));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GrayImage16::new(0, 3, vec![]).is_err());
        assert!(GrayImage16::new(2, 2, vec![1, 2, 3]).is_err());
        assert!(BinaryMask::new(usize::MAX, 2, vec![]).is_err());
        assert!(FloatImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn mask_gray_encoding() {
        let m = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(m.to_gray16().pixels(), &[65535, 0, 0, 65535]);
        assert_eq!(BinaryMask::from_gray16(&m.to_gray16()), m);
    }

    fn small_image() -> impl Strategy<Value = GrayImage16> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u16..=60000, w * h)
                .prop_map(move |px| GrayImage16::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mean_within_range(img in small_image()) {
            let s = image_stats(&img);
            prop_assert!(f64::from(s.min) <= s.mean && s.mean <= f64::from(s.max));
            prop_assert_eq!(s.std == 0.0, s.min == s.max);
        }

        #[test]
        fn shift_moves_mean_not_std(img in small_image(), c in 0u16..5000) {
            let shifted = GrayImage16::new(
                img.width(), img.height(),
                img.pixels().iter().map(|p| p + c).collect(),
            ).unwrap();
            let (a, b) = (image_stats(&img), image_stats(&shifted));
            prop_assert!((b.mean - a.mean - f64::from(c)).abs() < 1e-9);
            prop_assert!((b.std - a.std).abs() < 1e-9 * (1.0 + a.std));
        }
    }
}
