//! Synthetic phantoms with exact ground truth.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`.
//! Uniform variates are `(next_u64 >> 11) * 2^-53`; normal variates use one
//! Box–Muller transform per draw (`sqrt(-2 ln(1 - u1)) * cos(2π u2)`), so the
//! stream is reproducible in any language. Draw order:
//!
//! 1. lattice jitter, two uniforms per lattice node in raster order of nodes;
//! 2. per body pixel in raster order: the class or band sample, then one
//!    noise uniform when `noise > 0`.
//!
//! Lesion pixels take the lesion intensity but still consume their draws.

use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage16};
use crate::io::{write_image, write_mask, ImageFormat, MAX_PIXELS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let dx = (x as f64 - self.cx) / self.rx;
        let dy = (y as f64 - self.cy) / self.ry;
        dx * dx + dy * dy <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub mean: f64,
    pub sigma: f64,
}

/// Dark-class disks on a square lattice with random offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkLayout {
    pub spacing: f64,
    pub radius: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LesionBlob {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub intensity: f64,
}

impl LesionBlob {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (dx, dy) = (x as f64 - self.cx, y as f64 - self.cy);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub body: Ellipse,
    pub dark: ClassSpec,
    pub bright: ClassSpec,
    pub layout: DarkLayout,
    /// Uniform `[lo, hi]` body intensities in place of the two classes.
    pub band: Option<[f64; 2]>,
    pub lesions: Vec<LesionBlob>,
    /// Half-width `h` of the multiplicative noise factor `U(1 - h, 1 + h)`.
    pub noise: f64,
    /// Linear gain from `min` at the left column to `max` at the right.
    pub gain: Option<[f64; 2]>,
    pub seed: Option<u64>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 448,
            height: 448,
            body: Ellipse { cx: 223.5, cy: 223.5, rx: 200.0, ry: 170.0 },
            dark: ClassSpec { mean: 450.0, sigma: 60.0 },
            bright: ClassSpec { mean: 1100.0, sigma: 80.0 },
            layout: DarkLayout { spacing: 24.0, radius: 8.5, jitter: 4.0 },
            band: None,
            lesions: Vec::new(),
            noise: 0.0,
            gain: None,
            seed: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}

fn finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl PhantomSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width.saturating_mul(self.height) > MAX_PIXELS {
            return Err(invalid(format!("invalid phantom size {}x{}", self.width, self.height)));
        }
        let b = &self.body;
        if !(b.cx.is_finite() && b.cy.is_finite() && b.rx.is_finite() && b.ry.is_finite() && b.rx > 0.0 && b.ry > 0.0) {
            return Err(invalid("body ellipse must have finite center and positive radii"));
        }
        for (name, c) in [("dark", self.dark), ("bright", self.bright)] {
            finite_nonneg(&format!("{name}.mean"), c.mean)?;
            finite_nonneg(&format!("{name}.sigma"), c.sigma)?;
        }
        match self.band {
            Some([lo, hi]) => {
                finite_nonneg("band low", lo)?;
                if !(hi.is_finite() && lo < hi) {
                    return Err(invalid(format!("band must satisfy low < high, got [{lo}, {hi}]")));
                }
            }
            None => {
                let gap = (self.bright.mean - self.dark.mean).abs();
                let need = 3.0 * (self.dark.sigma + self.bright.sigma);
                if gap <= need {
                    return Err(invalid(format!(
                        "class means {} and {} must differ by more than {need}",
                        self.dark.mean, self.bright.mean
                    )));
                }
            }
        }
        let l = &self.layout;
        finite_nonneg("layout.radius", l.radius)?;
        finite_nonneg("layout.jitter", l.jitter)?;
        if !(l.spacing.is_finite() && l.spacing >= 1.0) {
            return Err(invalid(format!("layout.spacing must be >= 1, got {}", l.spacing)));
        }
        for (i, les) in self.lesions.iter().enumerate() {
            if !(les.cx.is_finite() && les.cy.is_finite() && les.radius.is_finite() && les.radius > 0.0) {
                return Err(invalid(format!("lesion {i} needs a finite center and positive radius")));
            }
            finite_nonneg(&format!("lesion {i} intensity"), les.intensity)?;
        }
        if !(self.noise.is_finite() && (0.0..1.0).contains(&self.noise)) {
            return Err(invalid(format!("noise half-width must lie in [0, 1), got {}", self.noise)));
        }
        if let Some([lo, hi]) = self.gain {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > 0.0) {
                return Err(invalid(format!("gain ramp must be positive, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed { format: "phantom spec", reason: e.to_string() })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn gain_at(&self, x: usize) -> f64 {
        match self.gain {
            Some([lo, hi]) if self.width > 1 => lo + (hi - lo) * x as f64 / (self.width - 1) as f64,
            Some([lo, _]) => lo,
            None => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: GrayImage16,
    pub body: BinaryMask,
    pub dark_class: BinaryMask,
    pub lesions: BinaryMask,
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Dark-class membership: within `radius` of some jittered lattice node.
fn dark_lattice(spec: &PhantomSpec, rng: &mut Stream) -> Vec<bool> {
    let (w, h) = (spec.width, spec.height);
    let l = spec.layout;
    let nx = (w as f64 / l.spacing).ceil() as usize;
    let ny = (h as f64 / l.spacing).ceil() as usize;
    let mut dark = vec![false; w * h];
    let r2 = l.radius * l.radius;
    let reach = l.radius.ceil() as isize;
    for j in 0..ny {
        for i in 0..nx {
            let jx = (2.0 * rng.uniform() - 1.0) * l.jitter;
            let jy = (2.0 * rng.uniform() - 1.0) * l.jitter;
            let cx = (i as f64 + 0.5) * l.spacing + jx;
            let cy = (j as f64 + 0.5) * l.spacing + jy;
            let (ix, iy) = (cx.round() as isize, cy.round() as isize);
            for y in (iy - reach - 1)..=(iy + reach + 1) {
                for x in (ix - reach - 1)..=(ix + reach + 1) {
                    if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                        continue;
                    }
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    if dx * dx + dy * dy <= r2 {
                        dark[y as usize * w + x as usize] = true;
                    }
                }
            }
        }
    }
    dark
}

pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let seed = spec.seed.ok_or_else(|| invalid("phantom seed is required for reproducible output"))?;
    let mut rng = Stream(ChaCha8Rng::seed_from_u64(seed));
    let (w, h) = (spec.width, spec.height);
    let lattice = if spec.band.is_none() { dark_lattice(spec, &mut rng) } else { vec![false; w * h] };

    let mut pixels = vec![0u16; w * h];
    let mut body = vec![false; w * h];
    let mut dark = vec![false; w * h];
    let mut lesion = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !spec.body.contains(x, y) {
                continue;
            }
            let i = y * w + x;
            body[i] = true;
            let mut value = match spec.band {
                Some([lo, hi]) => lo + (hi - lo) * rng.uniform(),
                None => {
                    let class = if lattice[i] { spec.dark } else { spec.bright };
                    class.mean + class.sigma * rng.normal()
                }
            };
            let factor = if spec.noise > 0.0 { 1.0 + spec.noise * (2.0 * rng.uniform() - 1.0) } else { 1.0 };
            if let Some(les) = spec.lesions.iter().find(|l| l.contains(x, y)) {
                value = les.intensity;
                lesion[i] = true;
            } else {
                dark[i] = lattice[i];
            }
            pixels[i] = (value * spec.gain_at(x) * factor).round().clamp(0.0, 65535.0) as u16;
        }
    }
    Ok(Phantom {
        image: GrayImage16::new(w, h, pixels)?,
        body: BinaryMask::new(w, h, body)?,
        dark_class: BinaryMask::new(w, h, dark)?,
        lesions: BinaryMask::new(w, h, lesion)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestLesion {
    pub area: usize,
    pub centroid: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub image: String,
    pub body: String,
    pub dark_class: String,
    pub lesions: String,
    pub spec: String,
    pub body_pixels: usize,
    pub dark_pixels: usize,
    pub lesion_components: Vec<ManifestLesion>,
}

/// Writes `image.pgm`, the three ground-truth masks, the resolved spec and a
/// `manifest.json` into `dir`.
pub fn write_phantom_set(spec: &PhantomSpec, dir: impl AsRef<Path>) -> Result<Manifest> {
    let phantom = generate(spec)?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_image(&phantom.image, dir.join("image.pgm"), ImageFormat::Pgm16)?;
    write_mask(&phantom.body, dir.join("body.pgm"), ImageFormat::Pgm16)?;
    write_mask(&phantom.dark_class, dir.join("dark_class.pgm"), ImageFormat::Pgm16)?;
    write_mask(&phantom.lesions, dir.join("lesions.pgm"), ImageFormat::Pgm16)?;
    write_json(&dir.join("spec.json"), spec)?;
    let manifest = Manifest {
        seed: spec.seed.expect("checked by generate"),
        width: spec.width,
        height: spec.height,
        image: "image.pgm".into(),
        body: "body.pgm".into(),
        dark_class: "dark_class.pgm".into(),
        lesions: "lesions.pgm".into(),
        spec: "spec.json".into(),
        body_pixels: phantom.body.count(),
        dark_pixels: phantom.dark_class.count(),
        lesion_components: label_components(&phantom.lesions)
            .into_iter()
            .map(|c| ManifestLesion { area: c.area, centroid: c.centroid })
            .collect(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
