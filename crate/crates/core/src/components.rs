//! 4-connected component labelling.

use serde::{Deserialize, Serialize};

use crate::image::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    /// 1-based rank in the reported order.
    pub label: usize,
    pub area: usize,
    pub bbox: BoundingBox,
    /// Pixel-center centroid `(x, y)`.
    pub centroid: (f64, f64),
    #[serde(skip)]
    pub pixels: Vec<usize>,
}

/// Labels the 4-connected components of `mask`.
///
/// Components come back ordered by decreasing area; equal areas keep raster
/// order of their first pixel. Pixel index lists are raster-ordered.
pub fn label_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut found = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if bits[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        pixels.sort_unstable();
        found.push(summarize(pixels, w));
    }
    // stable sort keeps raster order among equal areas
    found.sort_by_key(|c| std::cmp::Reverse(c.area));
    for (i, c) in found.iter_mut().enumerate() {
        c.label = i + 1;
    }
    found
}

fn summarize(pixels: Vec<usize>, w: usize) -> Component {
    let mut bbox = BoundingBox { min_x: usize::MAX, min_y: usize::MAX, max_x: 0, max_y: 0 };
    let (mut sx, mut sy) = (0u64, 0u64);
    for &i in &pixels {
        let (x, y) = (i % w, i / w);
        bbox.min_x = bbox.min_x.min(x);
        bbox.max_x = bbox.max_x.max(x);
        bbox.min_y = bbox.min_y.min(y);
        bbox.max_y = bbox.max_y.max(y);
        sx += x as u64;
        sy += y as u64;
    }
    let n = pixels.len() as f64;
    Component { label: 0, area: pixels.len(), bbox, centroid: (sx as f64 / n, sy as f64 / n), pixels }
}
