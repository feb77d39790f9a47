//! Effective pipeline parameters shared by the CLI and the service.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bias::BiasParams;
use crate::error::{Error, Result};
use crate::loft::{default_bounds, LoftBounds, DEFAULT_SMOOTH_WINDOW};
use crate::morphology::{Shape, StructuringElement};
use crate::preprocess::{
    GhostRemovalParams, PreprocessParams, DEFAULT_BINARIZE_THRESHOLD, DEFAULT_ITERATIONS, DEFAULT_LAMBDA,
    DEFAULT_SE_RADIUS,
};
use crate::segment::DEFAULT_MIN_AREA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Tissue,
    Lesion,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tissue" => Ok(Self::Tissue),
            "lesion" => Ok(Self::Lesion),
            other => Err(Error::InvalidParams(format!("unknown mode {other:?} (expected tissue or lesion)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tissue => "tissue",
            Self::Lesion => "lesion",
        })
    }
}

/// Every tunable of a segmentation run.
///
/// `gain_sigma: None` means width / 8 and `k: None` means the automatic edge
/// threshold; `lo`/`hi` apply to tissue mode only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    pub mode: Mode,
    pub pre_done: bool,
    pub binarize_threshold: u16,
    pub se_shape: Shape,
    pub se_radius: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub k: Option<f64>,
    pub gain_sigma: Option<f64>,
    pub final_sigma: f64,
    pub epsilon: f64,
    pub smooth_window: usize,
    pub lo: Option<u16>,
    pub hi: Option<u16>,
    pub min_area: usize,
}

/// Partial parameter set; `None` keeps the current value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamOverrides {
    pub pre_done: Option<bool>,
    pub binarize_threshold: Option<u16>,
    pub se_shape: Option<Shape>,
    pub se_radius: Option<usize>,
    pub lambda: Option<f64>,
    pub iterations: Option<usize>,
    pub k: Option<f64>,
    pub gain_sigma: Option<f64>,
    pub final_sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub smooth_window: Option<usize>,
    pub lo: Option<u16>,
    pub hi: Option<u16>,
    pub min_area: Option<usize>,
}

impl PipelineParams {
    pub fn defaults(mode: Mode) -> Self {
        let (lo, hi) = match mode {
            Mode::Tissue => {
                let b = default_bounds(u16::MAX).expect("full scale is valid");
                (Some(b.lo), Some(b.hi))
            }
            Mode::Lesion => (None, None),
        };
        Self {
            mode,
            pre_done: false,
            binarize_threshold: DEFAULT_BINARIZE_THRESHOLD,
            se_shape: Shape::Disk,
            se_radius: DEFAULT_SE_RADIUS,
            lambda: DEFAULT_LAMBDA,
            iterations: DEFAULT_ITERATIONS,
            k: None,
            gain_sigma: None,
            final_sigma: BiasParams::DEFAULT_FINAL_SIGMA,
            epsilon: BiasParams::DEFAULT_EPSILON,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            lo,
            hi,
            min_area: DEFAULT_MIN_AREA,
        }
    }

    pub fn with_overrides(mut self, o: &ParamOverrides) -> Result<Self> {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        take!(pre_done, binarize_threshold, se_shape, se_radius, lambda, iterations, final_sigma, epsilon,
              smooth_window, min_area);
        if o.k.is_some() {
            self.k = o.k;
        }
        if o.gain_sigma.is_some() {
            self.gain_sigma = o.gain_sigma;
        }
        if o.lo.is_some() || o.hi.is_some() {
            if self.mode == Mode::Lesion {
                return Err(Error::InvalidParams("--lo/--hi apply to tissue mode only".into()));
            }
            self.lo = o.lo.or(self.lo);
            self.hi = o.hi.or(self.hi);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.smooth_window == 0 || self.smooth_window.is_multiple_of(2) {
            return bad(format!("smooth window must be a positive odd number, got {}", self.smooth_window));
        }
        match self.mode {
            Mode::Tissue => {
                self.bounds()?;
            }
            Mode::Lesion if self.lo.is_some() || self.hi.is_some() => {
                return bad("loft bounds apply to tissue mode only".into());
            }
            Mode::Lesion => {}
        }
        if self.pre_done {
            return Ok(());
        }
        self.ghost()?.validate()?;
        if !(self.lambda > 0.0 && self.lambda <= 0.25) {
            return bad(format!("lambda must lie in (0, 0.25], got {}", self.lambda));
        }
        if let Some(k) = self.k {
            if !(k.is_finite() && k > 0.0) {
                return bad(format!("k must be finite and > 0, got {k}"));
            }
        }
        if let Some(g) = self.gain_sigma {
            BiasParams { gain_sigma: g, final_sigma: self.final_sigma, epsilon: self.epsilon }.validate()?;
        } else if !(self.final_sigma.is_finite() && self.final_sigma >= 0.0) {
            return bad(format!("final_sigma must be >= 0, got {}", self.final_sigma));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        Ok(())
    }

    fn ghost(&self) -> Result<GhostRemovalParams> {
        Ok(GhostRemovalParams {
            binarize_threshold: self.binarize_threshold,
            se: StructuringElement::new(self.se_shape, self.se_radius)?,
        })
    }

    /// Tissue-mode search interval.
    pub fn bounds(&self) -> Result<LoftBounds> {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => LoftBounds::new(lo, hi),
            _ => Err(Error::InvalidParams("tissue mode needs both lo and hi".into())),
        }
    }

    /// Fills in width-dependent defaults.
    pub fn resolved(mut self, width: usize) -> Self {
        if self.gain_sigma.is_none() {
            self.gain_sigma = Some(BiasParams::for_width(width).gain_sigma);
        }
        self
    }

    pub fn preprocess(&self, width: usize) -> Result<PreprocessParams> {
        let r = self.resolved(width);
        let bias = BiasParams {
            gain_sigma: r.gain_sigma.expect("resolved"),
            final_sigma: r.final_sigma,
            epsilon: r.epsilon,
        };
        bias.validate()?;
        Ok(PreprocessParams { ghost: r.ghost()?, lambda: r.lambda, iterations: r.iterations, k: r.k, bias })
    }
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self::defaults(Mode::Tissue)
    }
}

/// Contents of `params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub truth: Option<PathBuf>,
    pub params: PipelineParams,
}

impl RunConfig {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Malformed { format: "params", reason: e.to_string() })?;
        cfg.params.validate()?;
        Ok(cfg)
    }
}
