//! One full segmentation run: preprocessing, loft threshold, mask.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{BinaryMask, GrayImage16};
use crate::loft::{Candidate, IntensityHistogram, LoftBounds, ThresholdResult};
use crate::params::{Mode, PipelineParams};
use crate::preprocess::{preprocess_pipeline, Preprocessed};
use crate::segment::{segment_lesion_prepared, segment_tissue_prepared, LesionReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub preprocess_ms: f64,
    pub segment_ms: f64,
    pub total_ms: f64,
}

/// Serialized as `threshold.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub mode: Mode,
    pub threshold: u16,
    pub threshold_count: u64,
    pub candidates: Vec<Candidate>,
    pub smoothing_window: usize,
    pub bounds: LoftBounds,
    /// Edge threshold used for diffusion; `null` for preprocessed input.
    pub k: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub params: PipelineParams,
    pub mask: BinaryMask,
    pub threshold: ThresholdResult,
    pub histogram: IntensityHistogram,
    pub lesions: Option<LesionReport>,
    pub preprocessed: Preprocessed,
    pub timing: Timing,
}

impl RunOutcome {
    pub fn threshold_report(&self) -> ThresholdReport {
        ThresholdReport {
            mode: self.params.mode,
            threshold: self.threshold.threshold,
            threshold_count: self.threshold.threshold_count(),
            candidates: self.threshold.candidates.clone(),
            smoothing_window: self.threshold.smoothing_window,
            bounds: self.threshold.bounds,
            k: self.preprocessed.k,
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs the pipeline with `params` resolved against the image width.
///
/// A "no loft found" failure carries the histogram it was computed from.
pub fn run(image: &GrayImage16, params: &PipelineParams) -> Result<RunOutcome> {
    let start = Instant::now();
    let params = params.resolved(image.width());
    params.validate()?;
    let pre = if params.pre_done {
        Preprocessed::already_done(image.clone())
    } else {
        preprocess_pipeline(image, &params.preprocess(image.width())?)?
    };
    let preprocess_ms = ms(start);
    let seg_start = Instant::now();
    let (mask, threshold, histogram, lesions, preprocessed) = match params.mode {
        Mode::Tissue => {
            let s = segment_tissue_prepared(pre, params.bounds()?, params.smooth_window)?;
            (s.mask, s.threshold, s.histogram, None, s.preprocessed)
        }
        Mode::Lesion => {
            let s = segment_lesion_prepared(pre, params.smooth_window, params.min_area)?;
            (s.mask, s.threshold, s.histogram, Some(s.report), s.preprocessed)
        }
    };
    let timing = Timing { preprocess_ms, segment_ms: ms(seg_start), total_ms: ms(start) };
    Ok(RunOutcome { params, mask, threshold, histogram, lesions, preprocessed, timing })
}
