//! Spectrum-loft threshold selection.
//!
//! The intensity histogram of a two-class image shows a valley (the loft)
//! between the class peaks. Within empirical intensity bounds every local
//! minimum is collected and the one with the lowest frequency becomes the
//! threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_same_shape, BinaryMask, GrayImage16};

pub const BINS: usize = 1 << 16;
pub const DEFAULT_SMOOTH_WINDOW: usize = 5;

/// Reference bounds for full-scale 16-bit data: the adipose floor and the
/// fibroglandular ceiling.
pub const REFERENCE_LO: u16 = 300;
pub const REFERENCE_HI: u16 = 800;

/// One count per 16-bit intensity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl IntensityHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() != BINS {
            return Err(Error::InvalidParams(format!("histogram needs {BINS} bins, got {}", counts.len())));
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    /// Places `values` at consecutive intensities starting at `start`.
    pub fn from_sparse(start: u16, values: &[u64]) -> Result<Self> {
        let mut counts = vec![0u64; BINS];
        let end = start as usize + values.len();
        if end > BINS {
            return Err(Error::InvalidParams("sparse histogram runs past 65535".into()));
        }
        counts[start as usize..end].copy_from_slice(values);
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, intensity: u16) -> u64 {
        self.counts[intensity as usize]
    }

    /// Highest intensity with a non-zero count.
    pub fn max_intensity(&self) -> Option<u16> {
        self.counts.iter().rposition(|&c| c > 0).map(|i| i as u16)
    }

    /// `intensity,count` lines with a header, covering 0 through the highest
    /// occupied bin.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "intensity,count")?;
        let last = self.max_intensity().unwrap_or(0) as usize;
        for (i, c) in self.counts[..=last].iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Counts of every pixel, or only those under `mask`.
pub fn histogram(image: &GrayImage16, mask: Option<&BinaryMask>) -> Result<IntensityHistogram> {
    let mut counts = vec![0u64; BINS];
    match mask {
        None => image.pixels().iter().for_each(|&p| counts[p as usize] += 1),
        Some(m) => {
            ensure_same_shape(image.width(), image.height(), m.width(), m.height())?;
            image
                .pixels()
                .iter()
                .zip(m.bits())
                .filter(|(_, &b)| b)
                .for_each(|(&p, _)| counts[p as usize] += 1);
        }
    }
    IntensityHistogram::from_counts(counts)
}

/// Centered moving average that shrinks at both ends, rounded half-up to
/// the nearest integer. `window == 1` is the identity.
///
/// The smoothed total generally differs from the pixel count.
pub fn smooth_histogram(h: &IntensityHistogram, window: usize) -> Result<IntensityHistogram> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("smoothing window must be odd and >= 1, got {window}")));
    }
    if window == 1 {
        return Ok(h.clone());
    }
    let r = window / 2;
    let n = h.counts.len();
    let mut prefix = vec![0u64; n + 1];
    for (i, &c) in h.counts.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    let counts = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n - 1);
            let sum = prefix[hi + 1] - prefix[lo];
            let len = (hi - lo + 1) as u64;
            (2 * sum + len) / (2 * len)
        })
        .collect();
    IntensityHistogram::from_counts(counts)
}

/// Open search interval `(lo, hi)` for the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoftBounds {
    pub lo: u16,
    pub hi: u16,
}

impl LoftBounds {
    pub fn new(lo: u16, hi: u16) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidParams(format!("loft bounds need lo < hi, got [{lo},{hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, intensity: u16) -> bool {
        self.lo < intensity && intensity < self.hi
    }
}

/// Reference bounds scaled linearly to an image whose full scale is
/// `bit_depth_max`, with `lo >= 1` and `hi >= lo + 2` so the interval keeps
/// at least one interior bin.
pub fn default_bounds(bit_depth_max: u16) -> Result<LoftBounds> {
    if bit_depth_max < 255 {
        return Err(Error::InvalidParams(format!("bit depth maximum must be >= 255, got {bit_depth_max}")));
    }
    let scale = f64::from(bit_depth_max) / 65535.0;
    let lo = (f64::from(REFERENCE_LO) * scale).round().max(1.0) as u16;
    let hi = ((f64::from(REFERENCE_HI) * scale).round() as u16).max(lo + 2);
    LoftBounds::new(lo, hi)
}

/// A local minimum of the smoothed histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub intensity: u16,
    /// Smoothed count at the minimum.
    pub count: u64,
    /// Length of the run of equal counts the minimum sits on.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: u16,
    pub candidates: Vec<Candidate>,
    pub smoothing_window: usize,
    pub bounds: LoftBounds,
}

impl ThresholdResult {
    pub fn threshold_count(&self) -> u64 {
        self.candidates
            .iter()
            .find(|c| c.intensity == self.threshold)
            .map(|c| c.count)
            .unwrap_or_default()
    }
}

/// Local minima of `counts` as runs of equal values with strictly larger
/// neighbours on both sides. Each run reports its center (lower middle for
/// even lengths). Runs touching either end of the histogram are not minima.
pub fn local_minima(counts: &[u64]) -> Vec<Candidate> {
    let mut out = Vec::new();
    let n = counts.len();
    let mut i = 0;
    while i < n {
        let c = counts[i];
        let mut j = i;
        while j + 1 < n && counts[j + 1] == c {
            j += 1;
        }
        if i > 0 && j + 1 < n && counts[i - 1] > c && counts[j + 1] > c {
            out.push(Candidate { intensity: (i + (j - i) / 2) as u16, count: c, width: (j - i + 1) as u32 });
        }
        i = j + 1;
    }
    out
}

/// Finds the loft threshold inside `bounds`.
///
/// Minima are taken on the `window`-smoothed histogram; only those whose
/// center lies strictly inside the bounds count. The threshold is the
/// candidate with the smallest count. Ties go to the widest run (an empty
/// valley splits into several zero runs, the widest being the valley
/// floor), then to the lowest intensity.
pub fn find_loft(h: &IntensityHistogram, bounds: LoftBounds, window: usize) -> Result<ThresholdResult> {
    let smoothed = smooth_histogram(h, window)?;
    let candidates: Vec<Candidate> = local_minima(smoothed.counts())
        .into_iter()
        .filter(|c| bounds.contains(c.intensity))
        .collect();
    let best = candidates
        .iter()
        .min_by(|a, b| a.count.cmp(&b.count).then(b.width.cmp(&a.width)).then(a.intensity.cmp(&b.intensity)))
        .ok_or(Error::NoLoft { lo: bounds.lo, hi: bounds.hi, histogram: None })?;
    Ok(ThresholdResult { threshold: best.intensity, candidates: candidates.clone(), smoothing_window: window, bounds })
}
