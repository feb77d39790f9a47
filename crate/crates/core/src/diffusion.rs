//! Perona–Malik anisotropic diffusion with an automatically chosen edge
//! threshold, plus the speckle index used to check its effect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{image_stats, BinaryMask, FloatImage, GrayImage16};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Edge-magnitude threshold of the conductance `exp(-(|∇|/k)^2)`.
    pub k: f64,
    /// Explicit step weight; the 4-neighbour scheme is stable up to 0.25.
    pub lambda: f64,
    pub iterations: usize,
}

impl DiffusionParams {
    pub fn new(k: f64, lambda: f64, iterations: usize) -> Result<Self> {
        let p = Self { k, lambda, iterations };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidParams(format!("diffusion k must be > 0, got {}", self.k)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 0.25) {
            return Err(Error::InvalidParams(format!(
                "diffusion lambda must lie in (0, 0.25], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Whole-image edge threshold `2 ln(m·n) √mean / std`.
///
/// Uses the natural log and the population standard deviation.
pub fn compute_k(image: &GrayImage16) -> Result<f64> {
    let stats = image_stats(image);
    if stats.std == 0.0 {
        return Err(Error::DegenerateImage);
    }
    let n = image.len() as f64;
    Ok(2.0 * n.ln() * stats.mean.sqrt() / stats.std)
}

#[inline]
fn conductance(grad: f64, inv_k2: f64) -> f64 {
    (-(grad * grad) * inv_k2).exp()
}

/// Explicit 4-neighbour Perona–Malik iterations with replicated borders.
///
/// Each output pixel depends only on its own neighbourhood in the previous
/// iterate and sums the four fluxes in a fixed order, so row-parallel
/// evaluation is bit-identical to a serial run.
pub fn diffuse(image: &GrayImage16, params: &DiffusionParams) -> Result<FloatImage> {
    diffuse_float(&image.to_float(), params)
}

pub fn diffuse_float(image: &FloatImage, params: &DiffusionParams) -> Result<FloatImage> {
    params.validate()?;
    let (w, h) = (image.width(), image.height());
    let inv_k2 = 1.0 / (params.k * params.k);
    let lambda = params.lambda;
    let mut cur = image.values().to_vec();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..params.iterations {
        let src = &cur;
        next.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let up = if y == 0 { y } else { y - 1 };
            let down = if y + 1 == h { y } else { y + 1 };
            for (x, out) in row.iter_mut().enumerate() {
                let left = if x == 0 { x } else { x - 1 };
                let right = if x + 1 == w { x } else { x + 1 };
                let v = src[y * w + x];
                let gn = src[up * w + x] - v;
                let gs = src[down * w + x] - v;
                let ge = src[y * w + right] - v;
                let gw = src[y * w + left] - v;
                let flux = conductance(gn, inv_k2) * gn
                    + conductance(gs, inv_k2) * gs
                    + conductance(ge, inv_k2) * ge
                    + conductance(gw, inv_k2) * gw;
                *out = v + lambda * flux;
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FloatImage::from_parts(w, h, cur))
}

/// Mean over every full `window × window` position of local std / local mean.
///
/// Windows with a non-positive mean are skipped. The local std is the
/// population form.
pub fn speckle_index(image: &FloatImage, window: usize) -> Result<f64> {
    speckle_index_impl(image, window, None)
}

/// Like [`speckle_index`] but only windows lying entirely inside `mask`
/// contribute, which keeps the body outline from registering as speckle.
pub fn speckle_index_masked(image: &FloatImage, mask: &BinaryMask, window: usize) -> Result<f64> {
    crate::image::ensure_same_shape(image.width(), image.height(), mask.width(), mask.height())?;
    speckle_index_impl(image, window, Some(mask))
}

fn speckle_index_impl(image: &FloatImage, window: usize, mask: Option<&BinaryMask>) -> Result<f64> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("speckle window must be odd and >= 3, got {window}")));
    }
    let (w, h) = (image.width(), image.height());
    if window > w || window > h {
        return Err(Error::NoValidWindows);
    }
    let vals = image.values();
    let inside = mask.map(|m| {
        let (mw, mh) = (w + 1, h + 1);
        let mut sat = vec![0u32; mw * mh];
        for y in 0..h {
            for x in 0..w {
                sat[(y + 1) * mw + x + 1] = u32::from(m.get(x, y)) + sat[y * mw + x + 1]
                    + sat[(y + 1) * mw + x]
                    - sat[y * mw + x];
            }
        }
        sat
    });
    let area = (window * window) as f64;
    let full = (window * window) as u32;
    let rows: Vec<(f64, usize)> = (0..=h - window)
        .into_par_iter()
        .map(|y0| {
            let mut sum = 0.0;
            let mut n = 0usize;
            for x0 in 0..=w - window {
                if let Some(sat) = &inside {
                    let mw = w + 1;
                    let (x1, y1) = (x0 + window, y0 + window);
                    let c = sat[y1 * mw + x1] + sat[y0 * mw + x0] - sat[y0 * mw + x1] - sat[y1 * mw + x0];
                    if c != full {
                        continue;
                    }
                }
                let mut s = 0.0;
                for yy in y0..y0 + window {
                    s += vals[yy * w + x0..yy * w + x0 + window].iter().sum::<f64>();
                }
                let mean = s / area;
                if mean <= 0.0 {
                    continue;
                }
                let mut ss = 0.0;
                for yy in y0..y0 + window {
                    for &v in &vals[yy * w + x0..yy * w + x0 + window] {
                        ss += (v - mean) * (v - mean);
                    }
                }
                sum += (ss / area).sqrt() / mean;
                n += 1;
            }
            (sum, n)
        })
        .collect();
    let (sum, n) = rows.iter().fold((0.0, 0usize), |(s, c), &(rs, rc)| (s + rs, c + rc));
    if n == 0 {
        return Err(Error::NoValidWindows);
    }
    Ok(sum / n as f64)
}
