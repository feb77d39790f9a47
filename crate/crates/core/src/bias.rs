//! Multiplicative bias-field correction.
//!
//! The acquired image is modelled as gain × true image plus noise. The gain
//! is estimated as a wide Gaussian average of the image taken over body
//! pixels only, and the corrected image is the quotient. Overall scale is
//! not identifiable, so the estimated gain is normalised to mean one and the
//! quotient is rescaled to keep the body mean of the input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_same_shape, BinaryMask, FloatImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    /// Gaussian scale (pixels) of the gain estimate.
    pub gain_sigma: f64,
    /// Gaussian scale of the smoothing applied after correction; 0 disables it.
    pub final_sigma: f64,
    /// Lower clamp on the gain before dividing.
    pub epsilon: f64,
}

impl BiasParams {
    pub const DEFAULT_FINAL_SIGMA: f64 = 0.0;
    pub const DEFAULT_EPSILON: f64 = 1e-3;

    /// Defaults for an image of the given width: gain scale is width / 8.
    pub fn for_width(width: usize) -> Self {
        Self {
            gain_sigma: width as f64 / 8.0,
            final_sigma: Self::DEFAULT_FINAL_SIGMA,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_sigma.is_finite() && self.gain_sigma > 0.0) {
            return Err(Error::InvalidParams(format!("gain_sigma must be > 0, got {}", self.gain_sigma)));
        }
        if !(self.final_sigma.is_finite() && self.final_sigma >= 0.0) {
            return Err(Error::InvalidParams(format!("final_sigma must be >= 0, got {}", self.final_sigma)));
        }
        if self.gain_sigma <= self.final_sigma {
            return Err(Error::InvalidParams(format!(
                "gain_sigma ({}) must exceed final_sigma ({})",
                self.gain_sigma, self.final_sigma
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as usize;
    let denom = 2.0 * sigma * sigma;
    (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect()
}

/// 1-D convolution along rows with zero padding.
fn convolve_rows(src: &[f64], w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w).zip(src.par_chunks(w)).for_each(|(dst, row)| {
        for (x, o) in dst.iter_mut().enumerate() {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for xx in lo..=hi {
                acc += kernel[xx + r - x] * row[xx];
            }
            *o = acc;
        }
    });
    out
}

fn transpose(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(h).enumerate().for_each(|(x, col)| {
        for (y, v) in col.iter_mut().enumerate() {
            *v = src[y * w + x];
        }
    });
    out
}

fn separable_blur(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let rows = convolve_rows(src, w, kernel);
    let t = transpose(&rows, w, h);
    let cols = convolve_rows(&t, h, kernel);
    transpose(&cols, h, w)
}

/// Gaussian average of `image` using only pixels inside `mask`
/// (normalised convolution). Pixels outside the mask come back as zero.
pub fn masked_gaussian(image: &FloatImage, mask: &BinaryMask, sigma: f64) -> Result<FloatImage> {
    ensure_same_shape(image.width(), image.height(), mask.width(), mask.height())?;
    let (w, h) = (image.width(), image.height());
    if sigma == 0.0 {
        let values = image.values().iter().zip(mask.bits()).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        return Ok(FloatImage::from_parts(w, h, values));
    }
    let kernel = gaussian_kernel(sigma);
    let weights: Vec<f64> = mask.bits().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let weighted: Vec<f64> = image.values().iter().zip(&weights).map(|(v, m)| v * m).collect();
    let num = separable_blur(&weighted, w, h, &kernel);
    let den = separable_blur(&weights, w, h, &kernel);
    let values = num
        .iter()
        .zip(&den)
        .zip(mask.bits())
        .map(|((&n, &d), &m)| if m && d > 0.0 { n / d } else { 0.0 })
        .collect();
    Ok(FloatImage::from_parts(w, h, values))
}

fn body_mean(values: &[f64], mask: &BinaryMask) -> f64 {
    let (sum, n) = values
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    sum / n as f64
}

/// Mean-one gain estimate over the body (zero outside).
pub fn estimate_gain(image: &FloatImage, body: &BinaryMask, gain_sigma: f64) -> Result<FloatImage> {
    let smooth = masked_gaussian(image, body, gain_sigma)?;
    let mean = body_mean(smooth.values(), body);
    if mean.is_nan() || mean <= 0.0 {
        return Ok(smooth);
    }
    let values = smooth.values().iter().map(|v| v / mean).collect();
    Ok(FloatImage::from_parts(image.width(), image.height(), values))
}

/// Divides out the estimated gain inside `body`, zeroes the outside, and
/// applies the final smoothing. The body mean of the result (before final
/// smoothing) equals the body mean of the input.
pub fn correct_bias(image: &FloatImage, body: &BinaryMask, params: &BiasParams) -> Result<FloatImage> {
    params.validate()?;
    ensure_same_shape(image.width(), image.height(), body.width(), body.height())?;
    if body.is_empty() {
        return Err(Error::NoForeground);
    }
    if image.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParams("bias correction needs a non-negative image".into()));
    }
    let gain = estimate_gain(image, body, params.gain_sigma)?;
    let mut values: Vec<f64> = image
        .values()
        .iter()
        .zip(gain.values())
        .zip(body.bits())
        .map(|((&f, &g), &m)| if m { f / g.max(params.epsilon) } else { 0.0 })
        .collect();
    let before = body_mean(image.values(), body);
    let after = body_mean(&values, body);
    if after > 0.0 {
        let scale = before / after;
        values.iter_mut().for_each(|v| *v *= scale);
    }
    let corrected = FloatImage::from_parts(image.width(), image.height(), values);
    masked_gaussian(&corrected, body, params.final_sigma)
}
