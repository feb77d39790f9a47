//! Ghost-artefact removal followed by diffusion and bias correction.

use serde::{Deserialize, Serialize};

use crate::bias::{correct_bias, BiasParams};
use crate::diffusion::{compute_k, diffuse, speckle_index_masked, DiffusionParams};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, FloatImage, GrayImage16};
use crate::morphology::{binarize, dilate, erode, StructuringElement};

pub const DEFAULT_BINARIZE_THRESHOLD: u16 = 100;
pub const DEFAULT_SE_RADIUS: usize = 3;
pub const DEFAULT_LAMBDA: f64 = 0.25;
pub const DEFAULT_ITERATIONS: usize = 15;
pub const SPECKLE_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostRemovalParams {
    pub binarize_threshold: u16,
    pub se: StructuringElement,
}

impl GhostRemovalParams {
    pub fn validate(&self) -> Result<()> {
        if self.binarize_threshold == 0 || self.binarize_threshold == u16::MAX {
            return Err(Error::InvalidParams(format!(
                "binarize threshold must lie strictly between 0 and 65535, got {}",
                self.binarize_threshold
            )));
        }
        if self.se.radius == 0 {
            return Err(Error::InvalidParams("structuring element radius must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for GhostRemovalParams {
    fn default() -> Self {
        Self {
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            se: StructuringElement::disk(DEFAULT_SE_RADIUS).expect("radius > 0"),
        }
    }
}

/// Binarise, open with `se`, and keep the original intensities under the
/// opened mask. Returns the cleaned image and the body mask.
pub fn remove_ghost_artifacts(image: &GrayImage16, params: &GhostRemovalParams) -> Result<(GrayImage16, BinaryMask)> {
    params.validate()?;
    let raw = binarize(image, params.binarize_threshold);
    let body = dilate(&erode(&raw, &params.se), &params.se);
    if body.is_empty() {
        return Err(Error::NoForeground);
    }
    let cleaned = image.masked(&body)?;
    Ok((cleaned, body))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessParams {
    pub ghost: GhostRemovalParams,
    pub lambda: f64,
    pub iterations: usize,
    /// Fixed edge threshold; `None` derives it from the ghost-free image.
    pub k: Option<f64>,
    pub bias: BiasParams,
}

impl PreprocessParams {
    pub fn defaults_for_width(width: usize) -> Self {
        Self {
            ghost: GhostRemovalParams::default(),
            lambda: DEFAULT_LAMBDA,
            iterations: DEFAULT_ITERATIONS,
            k: None,
            bias: BiasParams::for_width(width),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub image: GrayImage16,
    pub body: BinaryMask,
    /// Edge threshold used by the diffusion stage; `None` when the input
    /// arrived already preprocessed.
    pub k: Option<f64>,
    /// Speckle index over windows inside the body, before and after
    /// diffusion. `None` when the body holds no full window.
    pub speckle_before: Option<f64>,
    pub speckle_after: Option<f64>,
}

/// Runs ghost removal, diffusion and bias correction, then rounds back to
/// 16-bit with everything outside the body set to zero.
pub fn preprocess_pipeline(image: &GrayImage16, params: &PreprocessParams) -> Result<Preprocessed> {
    let (cleaned, body) = remove_ghost_artifacts(image, &params.ghost)?;
    let k = match params.k {
        Some(k) => k,
        None => compute_k(&cleaned)?,
    };
    let diffusion = DiffusionParams::new(k, params.lambda, params.iterations)?;
    let diffused = mask_float(&diffuse(&cleaned, &diffusion)?, &body);
    let speckle_before = speckle_index_masked(&cleaned.to_float(), &body, SPECKLE_WINDOW).ok();
    let speckle_after = speckle_index_masked(&diffused, &body, SPECKLE_WINDOW).ok();
    let corrected = correct_bias(&diffused, &body, &params.bias)?;
    let image = corrected.to_gray16().masked(&body)?;
    Ok(Preprocessed { image, body, k: Some(k), speckle_before, speckle_after })
}

impl Preprocessed {
    /// Wraps an image that already went through [`preprocess_pipeline`];
    /// the body is taken to be its non-zero pixels.
    pub fn already_done(image: GrayImage16) -> Self {
        let body = BinaryMask::from_gray16(&image);
        Self { image, body, k: None, speckle_before: None, speckle_after: None }
    }
}

fn mask_float(image: &FloatImage, mask: &BinaryMask) -> FloatImage {
    let values = image
        .values()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| if m { v.max(0.0) } else { 0.0 })
        .collect();
    FloatImage::from_parts(image.width(), image.height(), values)
}
