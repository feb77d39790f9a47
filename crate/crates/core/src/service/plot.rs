use serde::{Deserialize, Serialize};

use crate::loft::IntensityHistogram;

pub const MAX_PLOT_BUCKETS: usize = 2048;

/// Inclusive intensity range with the largest bin count inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotBucket {
    pub lo: u16,
    pub hi: u16,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotHistogram {
    pub total: u64,
    pub buckets: Vec<PlotBucket>,
}

fn chunks(hist: &IntensityHistogram, lo: usize, hi: usize, width: usize, out: &mut Vec<PlotBucket>) {
    let mut start = lo;
    while start <= hi {
        let end = (start + width - 1).min(hi);
        let count = hist.counts()[start..=end].iter().copied().max().unwrap_or(0);
        out.push(PlotBucket { lo: start as u16, hi: end as u16, count });
        start = end + 1;
    }
}

/// Reduces `hist` over `0..=max occupied` to at most `max_buckets` buckets.
/// When `keep` is given, that intensity gets a bucket of its own.
pub fn downsample(hist: &IntensityHistogram, keep: Option<u16>, max_buckets: usize) -> PlotHistogram {
    let max_buckets = max_buckets.max(4);
    let top = hist.max_intensity().map_or(0, usize::from).max(keep.map_or(0, usize::from));
    let n = top + 1;
    let mut buckets = Vec::new();
    if n <= max_buckets {
        chunks(hist, 0, top, 1, &mut buckets);
    } else if let Some(t) = keep.map(usize::from) {
        let width = (n - 1).div_ceil(max_buckets - 3);
        if t > 0 {
            chunks(hist, 0, t - 1, width, &mut buckets);
        }
        chunks(hist, t, t, 1, &mut buckets);
        if t < top {
            chunks(hist, t + 1, top, width, &mut buckets);
        }
    } else {
        chunks(hist, 0, top, n.div_ceil(max_buckets), &mut buckets);
    }
    PlotHistogram { total: hist.total(), buckets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sparse(pairs: &[(u16, u64)]) -> IntensityHistogram {
        let mut counts = vec![0u64; 1 << 16];
        for &(i, c) in pairs {
            counts[i as usize] = c;
        }
        IntensityHistogram::from_counts(counts).unwrap()
    }

    #[test]
    fn small_range_is_exact() {
        let h = sparse(&[(3, 5), (7, 2)]);
        let p = downsample(&h, Some(5), 2048);
        assert_eq!(p.buckets.len(), 8);
        assert_eq!(p.buckets[3], PlotBucket { lo: 3, hi: 3, count: 5 });
        assert_eq!(p.total, 7);
    }

    proptest! {
        #[test]
        fn threshold_bucket_kept(top in 2049u16.., t_frac in 0.0f64..1.0, max in 4usize..3000) {
            let t = (t_frac * top as f64) as u16;
            let h = sparse(&[(top, 1), (t, 9), (top / 2, 4)]);
            let p = downsample(&h, Some(t), max);
            prop_assert!(p.buckets.len() <= max.max(4));
            prop_assert!(p.buckets.iter().any(|b| b.lo == t && b.hi == t && b.count == 9));
            prop_assert_eq!(p.buckets[0].lo, 0);
            prop_assert_eq!(p.buckets.last().unwrap().hi, top);
            for w in p.buckets.windows(2) {
                prop_assert_eq!(w[0].hi + 1, w[1].lo);
            }
            let peak = p.buckets.iter().map(|b| b.count).max().unwrap();
            prop_assert_eq!(peak, 9);
        }
    }
}
