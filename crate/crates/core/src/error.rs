use std::path::PathBuf;

use crate::loft::IntensityHistogram;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} data: {reason}")]
    Malformed { format: &'static str, reason: String },

    #[error("truncated {format} payload: expected {expected} bytes, found {found}")]
    Truncated { format: &'static str, expected: usize, found: usize },

    #[error("unsupported bit depth: {0} (16-bit grayscale required)")]
    UnsupportedBitDepth(String),

    #[error("unsupported image: {0}")]
    Unsupported(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("shape mismatch: expected {}x{}, found {}x{}", expected.0, expected.1, found.0, found.1)]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("no foreground detected")]
    NoForeground,

    #[error("degenerate image for auto-k (zero standard deviation)")]
    DegenerateImage,

    #[error("no valid speckle windows")]
    NoValidWindows,

    /// The histogram is attached when the failure comes out of a full
    /// segmentation run, so callers can still plot it.
    #[error("no loft found in [{lo},{hi}]")]
    NoLoft { lo: u16, hi: u16, histogram: Option<Box<IntensityHistogram>> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn is_no_loft(&self) -> bool {
        matches!(self, Self::NoLoft { .. })
    }
}
