//! Spectrum-loft segmentation of 16-bit breast MR slices.
//!
//! The pipeline removes ghost artefacts outside the body, smooths with
//! Perona–Malik diffusion, divides out a smooth gain field, and thresholds
//! at the deepest valley of the intensity histogram inside empirical
//! bounds. Tissue mode keeps the dark side of the valley; lesion mode keeps
//! the bright side and reports its connected components.

pub mod bias;
pub mod cli;
pub mod components;
pub mod diffusion;
pub mod error;
pub mod image;
pub mod io;
pub mod loft;
pub mod metrics;
pub mod morphology;
pub mod params;
pub mod phantom;
pub mod pipeline;
pub mod preprocess;
pub mod segment;
pub mod service;

pub use error::{Error, Result};
pub use image::{BinaryMask, FloatImage, GrayImage16};
pub use params::{Mode, ParamOverrides, PipelineParams, RunConfig};
pub use pipeline::{run, RunOutcome};
