//! Tissue and lesion segmentation on top of the loft threshold.
//!
//! Tissue mode keeps the low-intensity side of the valley (fibroglandular
//! tissue sits below the adipose peak in T1 slices). Lesion mode searches
//! from the median intensity up to the brightest value, keeps the bright side,
//! and splits it into connected components reported largest first.

use serde::{Deserialize, Serialize};

use crate::components::{label_components, Component};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage16};
use crate::loft::{find_loft, histogram, IntensityHistogram, LoftBounds, ThresholdResult};
use crate::preprocess::{preprocess_pipeline, PreprocessParams, Preprocessed};

pub const DEFAULT_MIN_AREA: usize = 10;

#[derive(Debug, Clone)]
pub struct TissueSegmentation {
    pub mask: BinaryMask,
    pub threshold: ThresholdResult,
    pub histogram: IntensityHistogram,
    pub preprocessed: Preprocessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionReport {
    pub threshold: u16,
    pub components: Vec<Component>,
    pub min_area_applied: usize,
}

#[derive(Debug, Clone)]
pub struct LesionSegmentation {
    pub report: LesionReport,
    pub mask: BinaryMask,
    pub threshold: ThresholdResult,
    pub histogram: IntensityHistogram,
    pub preprocessed: Preprocessed,
}

fn attach_histogram(err: Error, hist: &IntensityHistogram) -> Error {
    match err {
        Error::NoLoft { lo, hi, .. } => Error::NoLoft { lo, hi, histogram: Some(Box::new(hist.clone())) },
        other => other,
    }
}

pub fn segment_tissue(
    image: &GrayImage16,
    prep: &PreprocessParams,
    bounds: LoftBounds,
    window: usize,
) -> Result<TissueSegmentation> {
    segment_tissue_prepared(preprocess_pipeline(image, prep)?, bounds, window)
}

/// Tissue segmentation of an image that is already preprocessed.
pub fn segment_tissue_prepared(pre: Preprocessed, bounds: LoftBounds, window: usize) -> Result<TissueSegmentation> {
    let hist = histogram(&pre.image, Some(&pre.body))?;
    let threshold = find_loft(&hist, bounds, window).map_err(|e| attach_histogram(e, &hist))?;
    let t = threshold.threshold;
    let bits = pre
        .image
        .pixels()
        .iter()
        .zip(pre.body.bits())
        .map(|(&p, &m)| m && p > 0 && p <= t)
        .collect();
    let mask = BinaryMask::new(pre.image.width(), pre.image.height(), bits)?;
    Ok(TissueSegmentation { mask, threshold, histogram: hist, preprocessed: pre })
}

pub fn segment_lesion(
    image: &GrayImage16,
    prep: &PreprocessParams,
    window: usize,
    min_area: usize,
) -> Result<LesionSegmentation> {
    segment_lesion_prepared(preprocess_pipeline(image, prep)?, window, min_area)
}

/// Search interval used in lesion mode: from the median of the non-zero
/// intensities (the bulk of body tissue) up to just below the brightest
/// occupied bin. Enhancement is brighter than the tissue it sits in, so
/// valleys below the median are never lesion boundaries.
pub fn lesion_bounds(hist: &IntensityHistogram) -> Result<LoftBounds> {
    let max = hist.max_intensity().unwrap_or(0);
    let hi = max.saturating_sub(1);
    let counts = &hist.counts()[1..];
    let total: u64 = counts.iter().sum();
    let mut seen = 0u64;
    let median = counts
        .iter()
        .position(|&c| {
            seen += c;
            2 * seen >= total
        })
        .map_or(0, |i| i + 1);
    let lo = u16::try_from(median.max(1)).expect("histogram index fits u16");
    LoftBounds::new(lo, hi).map_err(|_| Error::NoLoft { lo, hi, histogram: None })
}

pub fn segment_lesion_prepared(pre: Preprocessed, window: usize, min_area: usize) -> Result<LesionSegmentation> {
    let hist = histogram(&pre.image, Some(&pre.body))?;
    let threshold = lesion_bounds(&hist)
        .and_then(|b| find_loft(&hist, b, window))
        .map_err(|e| attach_histogram(e, &hist))?;
    let t = threshold.threshold;
    let (w, h) = (pre.image.width(), pre.image.height());
    let bright = pre.image.pixels().iter().zip(pre.body.bits()).map(|(&p, &m)| m && p > t).collect();
    let bright = BinaryMask::new(w, h, bright)?;
    let mut components: Vec<Component> = label_components(&bright).into_iter().filter(|c| c.area >= min_area).collect();
    let mut bits = vec![false; w * h];
    for (i, c) in components.iter_mut().enumerate() {
        c.label = i + 1;
        for &p in &c.pixels {
            bits[p] = true;
        }
    }
    let mask = BinaryMask::new(w, h, bits)?;
    let report = LesionReport { threshold: t, components, min_area_applied: min_area };
    Ok(LesionSegmentation { report, mask, threshold, histogram: hist, preprocessed: pre })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(cx: f64, cy: f64, r: f64) -> impl Fn(usize, usize) -> bool {
        move |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        }
    }

    #[test]
    fn lesion_bounds_start_at_median() {
        let hist = IntensityHistogram::from_sparse(0, &[50, 4, 9, 3, 0, 0, 2, 0, 5]).unwrap();
        assert_eq!(lesion_bounds(&hist).unwrap(), LoftBounds { lo: 2, hi: 7 });
        let tiny = IntensityHistogram::from_sparse(0, &[0, 3, 5]).unwrap();
        assert!(lesion_bounds(&tiny).unwrap_err().is_no_loft());
    }

    #[test]
    fn lesion_ignores_valleys_below_median() {
        // a dim cluster below the tissue bulk must not become the threshold
        let img = GrayImage16::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as i64 - 20, y as i64 - 25);
            if x < 10 && y < 10 {
                150 + ((x + y) % 3) as u16
            } else if dx * dx + dy * dy <= 9 {
                2000
            } else {
                500 + ((x * 7 + y * 3) % 40) as u16
            }
        })
        .unwrap();
        let seg = segment_lesion_prepared(Preprocessed::already_done(img), 1, 5).unwrap();
        assert!(seg.report.threshold > 540 && seg.report.threshold < 2000);
        assert_eq!(seg.report.components.len(), 1);
        assert_eq!(seg.report.components[0].area, 29);
    }

    #[test]
    fn prepared_tissue_partitions_body() {
        let body = disk(20.0, 20.0, 15.0);
        let dark = disk(20.0, 20.0, 7.0);
        let img = GrayImage16::from_fn(40, 40, |x, y| {
            if dark(x, y) {
                400 + ((x * 7 + y * 3) % 40) as u16
            } else if body(x, y) {
                1000 + ((x * 5 + y * 11) % 60) as u16
            } else {
                0
            }
        })
        .unwrap();
        let pre = Preprocessed::already_done(img);
        let body_mask = pre.body.clone();
        let seg = segment_tissue_prepared(pre, LoftBounds::new(300, 800).unwrap(), 1).unwrap();
        assert!(seg.mask.is_subset_of(&body_mask));
        let rest = body_mask.and(&seg.mask.complement()).unwrap();
        assert!(rest.and(&seg.mask).unwrap().is_empty());
        assert_eq!(rest.or(&seg.mask).unwrap(), body_mask);
        let truth = BinaryMask::from_fn(40, 40, &dark).unwrap();
        assert_eq!(seg.mask, truth);
    }

    #[test]
    fn no_loft_carries_histogram() {
        let img = GrayImage16::from_fn(20, 20, |x, y| (300 + x + 20 * y) as u16).unwrap();
        let err = segment_tissue_prepared(Preprocessed::already_done(img), LoftBounds::new(300, 800).unwrap(), 1)
            .unwrap_err();
        match err {
            Error::NoLoft { histogram: Some(h), .. } => assert_eq!(h.total(), 400),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lesion_components_sorted_and_filtered() {
        let big = disk(10.0, 10.0, 4.0);
        let small = disk(30.0, 10.0, 2.0);
        let img = GrayImage16::from_fn(40, 20, |x, y| {
            if big(x, y) || small(x, y) {
                1500
            } else {
                300 + ((x * 13 + y * 7) % 300) as u16
            }
        })
        .unwrap();
        let seg = segment_lesion_prepared(Preprocessed::already_done(img.clone()), 1, 5).unwrap();
        let areas: Vec<_> = seg.report.components.iter().map(|c| c.area).collect();
        assert_eq!(areas, vec![49, 13]);
        assert_eq!(seg.mask.count(), 62);
        let seg = segment_lesion_prepared(Preprocessed::already_done(img), 1, 20).unwrap();
        assert_eq!(seg.report.components.len(), 1);
        assert_eq!(seg.report.min_area_applied, 20);
        assert_eq!(seg.mask.count(), 49);
    }
}
