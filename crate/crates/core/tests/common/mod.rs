//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use spectral_loft::image::{BinaryMask, GrayImage16};
use spectral_loft::morphology::Shape;
use spectral_loft::phantom::{LesionBlob, PhantomSpec};

/// Minimum of `w·N(μ1,σ1) + (1−w)·N(μ2,σ2)` between the two means, located
/// by dense evaluation on a 0.01 grid.
pub fn mixture_valley(w_dark: f64, dark: (f64, f64), bright: (f64, f64)) -> f64 {
    let pdf = |x: f64, (m, s): (f64, f64)| (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let steps = ((bright.0 - dark.0) / 0.01).round() as usize;
    (0..=steps)
        .map(|i| dark.0 + i as f64 * 0.01)
        .map(|x| (x, w_dark * pdf(x, dark) + (1.0 - w_dark) * pdf(x, bright)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

pub fn footprint(shape: Shape, r: usize) -> Vec<(isize, isize)> {
    let r = r as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let inside = match shape {
                Shape::Square => true,
                Shape::Cross => dx == 0 || dy == 0,
                Shape::Disk => dx * dx + dy * dy <= r * r,
            };
            if inside {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn at(m: &BinaryMask, x: isize, y: isize) -> bool {
    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height() && m.get(x as usize, y as usize)
}

pub fn erode_oracle(m: &BinaryMask, fp: &[(isize, isize)]) -> BinaryMask {
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        fp.iter().all(|&(dx, dy)| at(m, x as isize + dx, y as isize + dy))
    })
    .unwrap()
}

pub fn dilate_oracle(m: &BinaryMask, fp: &[(isize, isize)]) -> BinaryMask {
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        fp.iter().any(|&(dx, dy)| at(m, x as isize + dx, y as isize + dy))
    })
    .unwrap()
}

/// Plain heat equation with the same explicit stencil and replicated borders.
pub fn linear_diffusion(values: &[f64], w: usize, h: usize, lambda: f64, iterations: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    for _ in 0..iterations {
        let mut next = cur.clone();
        for y in 0..h {
            for x in 0..w {
                let v = cur[y * w + x];
                let n = cur[y.saturating_sub(1) * w + x];
                let s = cur[(y + 1).min(h - 1) * w + x];
                let e = cur[y * w + (x + 1).min(w - 1)];
                let wv = cur[y * w + x.saturating_sub(1)];
                next[y * w + x] = v + lambda * ((n - v) + (s - v) + (e - v) + (wv - v));
            }
        }
        cur = next;
    }
    cur
}

/// `(dsc, ji)` from a direct pixel loop.
pub fn overlap_oracle(pred: &BinaryMask, truth: &BinaryMask) -> (f64, f64) {
    let (mut inter, mut a, mut b, mut union) = (0u64, 0u64, 0u64, 0u64);
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            let (p, t) = (pred.get(x, y), truth.get(x, y));
            inter += (p && t) as u64;
            a += p as u64;
            b += t as u64;
            union += (p || t) as u64;
        }
    }
    if a + b == 0 {
        return (1.0, 1.0);
    }
    (2.0 * inter as f64 / (a + b) as f64, inter as f64 / union as f64)
}

/// Area and centroid of the pixels a blob covers.
pub fn blob_truth(blob: &LesionBlob, w: usize, h: usize) -> (usize, (f64, f64)) {
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - blob.cx, y as f64 - blob.cy);
            if dx * dx + dy * dy <= blob.radius * blob.radius {
                n += 1;
                sx += x as f64;
                sy += y as f64;
            }
        }
    }
    (n, (sx / n as f64, sy / n as f64))
}

pub fn body_mean(values: impl Iterator<Item = f64> + Clone, body: &BinaryMask) -> f64 {
    let (s, n) = values
        .zip(body.bits())
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    s / n as f64
}

/// Bimodal tissue phantom used across the suites.
pub fn tissue_spec(seed: u64) -> PhantomSpec {
    PhantomSpec::default().with_seed(seed)
}

/// Lesion phantom: uniform body band with blobs at seeded random positions,
/// kept apart and inside the body. The last blob is smaller than the
/// default minimum area.
pub fn lesion_spec(seed: u64) -> PhantomSpec {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1e51);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut spec = PhantomSpec { band: Some([300.0, 600.0]), noise: 0.05, ..PhantomSpec::default() }.with_seed(seed);
    let radii = [6.2, 3.6, 4.5, 1.5];
    let body = spec.body;
    for &radius in &radii {
        loop {
            let (t, rho) = (unit() * std::f64::consts::TAU, unit().sqrt() * 0.8);
            let cx = body.cx + rho * body.rx * t.cos();
            let cy = body.cy + rho * body.ry * t.sin();
            let clear = spec.lesions.iter().all(|l: &LesionBlob| {
                ((l.cx - cx).powi(2) + (l.cy - cy).powi(2)).sqrt() > l.radius + radius + 6.0
            });
            if clear {
                spec.lesions.push(LesionBlob { cx, cy, radius, intensity: 1500.0 });
                break;
            }
        }
    }
    spec
}

pub fn random_mask(w: usize, h: usize, density: f64, next: &mut impl FnMut() -> f64) -> BinaryMask {
    let bits = (0..w * h).map(|_| next() < density).collect();
    BinaryMask::new(w, h, bits).unwrap()
}

pub fn gray_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> GrayImage16 {
    GrayImage16::from_fn(w, h, f).unwrap()
}
