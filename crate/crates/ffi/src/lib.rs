//! C ABI over `spectral_loft`.
//!
//! Images and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`SpectralStatus`]; on failure [`spectral_last_error`] describes the cause
//! for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectral_loft::io::{read_image_auto, write_image, ImageFormat};
use spectral_loft::metrics::MetricsReport;
use spectral_loft::{BinaryMask, Error, GrayImage16, Mode, ParamOverrides, PipelineParams, RunOutcome};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    ShapeMismatch = 5,
    NoForeground = 6,
    NoLoft = 7,
    Internal = 8,
    Panic = 9,
}

/// Values accepted by the `mode` argument of [`spectral_segment`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    Tissue = 0,
    Lesion = 1,
}

/// Opaque 16-bit grayscale image.
pub struct SpectralImage {
    inner: GrayImage16,
}

/// Opaque segmentation result.
pub struct SpectralResult {
    inner: RunOutcome,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpectralComponent {
    pub area: usize,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpectralMetrics {
    pub dsc: f64,
    pub ji: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(SpectralStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => SpectralStatus::Io,
            Error::Malformed { .. }
            | Error::Truncated { .. }
            | Error::UnsupportedBitDepth(_)
            | Error::Unsupported(_)
            | Error::InvalidImage(_) => SpectralStatus::Format,
            Error::ShapeMismatch { .. } => SpectralStatus::ShapeMismatch,
            Error::InvalidParams(_) => SpectralStatus::InvalidArgument,
            Error::NoForeground => SpectralStatus::NoForeground,
            Error::NoLoft { .. } => SpectralStatus::NoLoft,
            _ => SpectralStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SpectralStatus::NullArgument, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SpectralStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpectralStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f));
    let (status, msg) = match outcome {
        Ok(Ok(())) => (SpectralStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (SpectralStatus::Panic, "internal panic".to_string()),
    };
    set_last_error(&msg);
    status
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

fn into_handle<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` for null before building the value.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn spectral_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spectral_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `width * height` row-major samples into a new image.
///
/// # Safety
/// `pixels` must point to `width * height` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_new(
    width: usize,
    height: usize,
    pixels: *const u16,
    out: *mut *mut SpectralImage,
) -> SpectralStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if pixels.is_null() {
            return Err(null("pixels"));
        }
        let len = width.checked_mul(height).ok_or_else(|| invalid("image size overflows"))?;
        let data = std::slice::from_raw_parts(pixels, len).to_vec();
        let inner = GrayImage16::new(width, height, data)?;
        into_handle(SpectralImage { inner }, out);
        Ok(())
    })
}

/// Reads a 16-bit PGM or PNG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_read(path: *const c_char, out: *mut *mut SpectralImage) -> SpectralStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = read_image_auto(c_str(path, "path")?)?;
        into_handle(SpectralImage { inner }, out);
        Ok(())
    })
}

/// Writes an image; the format follows the extension (`.pgm` or `.png`).
///
/// # Safety
/// `image` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_write(image: *const SpectralImage, path: *const c_char) -> SpectralStatus {
    guard(|| {
        let image = deref(image, "image")?;
        let path = std::path::Path::new(c_str(path, "path")?);
        let format = ImageFormat::from_path(path).ok_or_else(|| invalid("path must end in .pgm or .png"))?;
        write_image(&image.inner, path, format)?;
        Ok(())
    })
}

/// Width of `image`, or 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_width(image: *const SpectralImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.width())
}

/// Height of `image`, or 0 for a null handle.
///
/// # Safety
/// `image` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_height(image: *const SpectralImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.height())
}

/// Copies the samples into `dst`, which must hold exactly `width * height`.
///
/// # Safety
/// `image` must be a live handle; `dst` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_copy_pixels(
    image: *const SpectralImage,
    dst: *mut u16,
    len: usize,
) -> SpectralStatus {
    guard(|| {
        let image = deref(image, "image")?;
        if dst.is_null() {
            return Err(null("dst"));
        }
        let src = image.inner.pixels();
        if len != src.len() {
            return Err(invalid(format!("buffer holds {len} values, image has {}", src.len())));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
        Ok(())
    })
}

/// # Safety
/// `image` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spectral_image_free(image: *mut SpectralImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Runs the full pipeline. `overrides_json` may be null or a JSON object
/// with parameter overrides, e.g. `{"lo": 300, "smooth_window": 1}`.
///
/// # Safety
/// `image` must be a live handle; `overrides_json` null or NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_segment(
    image: *const SpectralImage,
    mode: u32,
    overrides_json: *const c_char,
    out: *mut *mut SpectralResult,
) -> SpectralStatus {
    guard(|| {
        let image = deref(image, "image")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match mode {
            m if m == SpectralMode::Tissue as u32 => Mode::Tissue,
            m if m == SpectralMode::Lesion as u32 => Mode::Lesion,
            other => return Err(invalid(format!("unknown mode {other}"))),
        };
        let overrides: ParamOverrides = if overrides_json.is_null() {
            ParamOverrides::default()
        } else {
            serde_json::from_str(c_str(overrides_json, "overrides_json")?)
                .map_err(|e| invalid(format!("bad overrides: {e}")))?
        };
        let params = PipelineParams::defaults(mode).with_overrides(&overrides)?;
        let inner = spectral_loft::run(&image.inner, &params)?;
        into_handle(SpectralResult { inner }, out);
        Ok(())
    })
}

/// Threshold of a result, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spectral_result_threshold(result: *const SpectralResult) -> u16 {
    result.as_ref().map_or(0, |r| r.inner.threshold.threshold)
}

/// Copies the mask out as a new 0/65535 image.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_result_mask(result: *const SpectralResult, out: *mut *mut SpectralImage) -> SpectralStatus {
    guard(|| {
        let result = deref(result, "result")?;
        if out.is_null() {
            return Err(null("out"));
        }
        into_handle(SpectralImage { inner: result.inner.mask.to_gray16() }, out);
        Ok(())
    })
}

/// Number of lesion components (0 in tissue mode or for a null handle).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spectral_result_component_count(result: *const SpectralResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.inner.lesions.as_ref())
        .map_or(0, |l| l.components.len())
}

/// Component `index` in decreasing-area order.
///
/// # Safety
/// `result` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_result_component(
    result: *const SpectralResult,
    index: usize,
    out: *mut SpectralComponent,
) -> SpectralStatus {
    guard(|| {
        let result = deref(result, "result")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = result
            .inner
            .lesions
            .as_ref()
            .and_then(|l| l.components.get(index))
            .ok_or_else(|| invalid(format!("no component {index}")))?;
        *out = SpectralComponent {
            area: c.area,
            min_x: c.bbox.min_x,
            min_y: c.bbox.min_y,
            max_x: c.bbox.max_x,
            max_y: c.bbox.max_y,
            centroid_x: c.centroid.0,
            centroid_y: c.centroid.1,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spectral_result_free(result: *mut SpectralResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Overlap of two masks given as images (non-zero = set).
///
/// # Safety
/// Both images must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spectral_metrics(
    pred: *const SpectralImage,
    truth: *const SpectralImage,
    out: *mut SpectralMetrics,
) -> SpectralStatus {
    guard(|| {
        let pred = BinaryMask::from_gray16(&deref(pred, "pred")?.inner);
        let truth = BinaryMask::from_gray16(&deref(truth, "truth")?.inner);
        if out.is_null() {
            return Err(null("out"));
        }
        let r = MetricsReport::compare(&pred, &truth)?;
        *out = SpectralMetrics {
            dsc: r.dsc,
            ji: r.ji,
            tp: r.counts.tp,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
            tn: r.counts.tn,
        };
        Ok(())
    })
}
