//! Overlap measures between a predicted mask and ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl OverlapCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn overlap(pred: &BinaryMask, truth: &BinaryMask) -> Result<OverlapCounts> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::ShapeMismatch {
            expected: (truth.width(), truth.height()),
            found: (pred.width(), pred.height()),
        });
    }
    let mut c = OverlapCounts::default();
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Dice coefficient `2tp / (2tp + fp + fn)`; 1.0 when both masks are empty.
pub fn dsc(c: &OverlapCounts) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}

/// Jaccard index `tp / (tp + fp + fn)`; 1.0 when both masks are empty.
pub fn ji(c: &OverlapCounts) -> f64 {
    let denom = c.tp + c.fp + c.fn_;
    if denom == 0 {
        1.0
    } else {
        c.tp as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dsc: f64,
    pub ji: f64,
    pub counts: OverlapCounts,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "dsc,ji,tp,fp,fn,tn";

    pub fn from_counts(counts: OverlapCounts) -> Self {
        Self { dsc: dsc(&counts), ji: ji(&counts), counts }
    }

    pub fn compare(pred: &BinaryMask, truth: &BinaryMask) -> Result<Self> {
        overlap(pred, truth).map(Self::from_counts)
    }

    pub fn csv_line(&self) -> String {
        let c = &self.counts;
        format!("{},{},{},{},{},{}", self.dsc, self.ji, c.tp, c.fp, c.fn_, c.tn)
    }
}
