use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use spectral_loft::phantom::{generate, LesionBlob, PhantomSpec};
use spectral_loft::{run, GrayImage16, Mode, PipelineParams};
use spectral_loft_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(spectral_last_error()) }.to_string_lossy().into_owned()
}

fn handle(img: &GrayImage16) -> *mut SpectralImage {
    let mut out = ptr::null_mut();
    let s = unsafe { spectral_image_new(img.width(), img.height(), img.pixels().as_ptr(), &mut out) };
    assert_eq!(s, SpectralStatus::Ok);
    out
}

fn small_spec(seed: u64) -> PhantomSpec {
    let mut spec = PhantomSpec { width: 160, height: 160, ..PhantomSpec::default() }.with_seed(seed);
    spec.body.cx = 79.5;
    spec.body.cy = 79.5;
    spec.body.rx = 70.0;
    spec.body.ry = 60.0;
    spec
}

#[test]
fn image_round_trip() {
    let img = GrayImage16::from_fn(5, 3, |x, y| (x * 1000 + y) as u16).unwrap();
    let h = handle(&img);
    unsafe {
        assert_eq!((spectral_image_width(h), spectral_image_height(h)), (5, 3));
        let mut buf = vec![0u16; 15];
        assert_eq!(spectral_image_copy_pixels(h, buf.as_mut_ptr(), 15), SpectralStatus::Ok);
        assert_eq!(buf, img.pixels());
        assert_eq!(spectral_image_copy_pixels(h, buf.as_mut_ptr(), 14), SpectralStatus::InvalidArgument);
        assert!(last_error().contains("14"));
        spectral_image_free(h);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(spectral_image_new(2, 2, ptr::null(), &mut out), SpectralStatus::NullArgument);
        assert_eq!(last_error(), "pixels is null");
        assert_eq!(spectral_image_read(ptr::null(), &mut out), SpectralStatus::NullArgument);
        let mut res = ptr::null_mut();
        assert_eq!(spectral_segment(ptr::null(), 0, ptr::null(), &mut res), SpectralStatus::NullArgument);
        assert_eq!(spectral_image_width(ptr::null()), 0);
        assert_eq!(spectral_result_threshold(ptr::null()), 0);
        spectral_image_free(ptr::null_mut());
        spectral_result_free(ptr::null_mut());
    }
}

#[test]
fn bad_size_and_missing_file() {
    let px = [0u16; 4];
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(spectral_image_new(usize::MAX, 2, px.as_ptr(), &mut out), SpectralStatus::InvalidArgument);
        let path = CString::new("/nonexistent/x.pgm").unwrap();
        assert_eq!(spectral_image_read(path.as_ptr(), &mut out), SpectralStatus::Io);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn tissue_matches_library() {
    let p = generate(&small_spec(3)).unwrap();
    let expected = run(&p.image, &PipelineParams::defaults(Mode::Tissue)).unwrap();
    let h = handle(&p.image);
    unsafe {
        let mut res = ptr::null_mut();
        assert_eq!(spectral_segment(h, SpectralMode::Tissue as u32, ptr::null(), &mut res), SpectralStatus::Ok);
        assert_eq!(last_error(), "");
        assert_eq!(spectral_result_threshold(res), expected.threshold.threshold);
        assert_eq!(spectral_result_component_count(res), 0);
        let mut mask = ptr::null_mut();
        assert_eq!(spectral_result_mask(res, &mut mask), SpectralStatus::Ok);
        let mut buf = vec![0u16; p.image.len()];
        assert_eq!(spectral_image_copy_pixels(mask, buf.as_mut_ptr(), buf.len()), SpectralStatus::Ok);
        assert_eq!(buf, expected.mask.to_gray16().pixels());

        let truth = handle(&p.dark_class.to_gray16());
        let mut m = SpectralMetrics::default();
        assert_eq!(spectral_metrics(mask, truth, &mut m), SpectralStatus::Ok);
        assert!(m.dsc > 0.9, "{m:?}");
        assert_eq!(m.tp + m.fp + m.fn_ + m.tn, p.image.len() as u64);

        spectral_image_free(truth);
        spectral_image_free(mask);
        spectral_result_free(res);
        spectral_image_free(h);
    }
}

#[test]
fn lesion_components_exposed() {
    let mut spec = small_spec(4);
    spec.band = Some([300.0, 600.0]);
    spec.lesions = vec![
        LesionBlob { cx: 60.0, cy: 70.0, radius: 6.0, intensity: 1500.0 },
        LesionBlob { cx: 110.0, cy: 90.0, radius: 3.0, intensity: 1500.0 },
    ];
    let p = generate(&spec).unwrap();
    let h = handle(&p.image);
    unsafe {
        let mut res = ptr::null_mut();
        assert_eq!(spectral_segment(h, SpectralMode::Lesion as u32, ptr::null(), &mut res), SpectralStatus::Ok);
        assert_eq!(spectral_result_component_count(res), 2);
        let mut c = SpectralComponent::default();
        assert_eq!(spectral_result_component(res, 0, &mut c), SpectralStatus::Ok);
        assert_eq!((c.area, c.centroid_x, c.centroid_y), (113, 60.0, 70.0));
        assert_eq!(spectral_result_component(res, 2, &mut c), SpectralStatus::InvalidArgument);
        spectral_result_free(res);
        spectral_image_free(h);
    }
}

#[test]
fn segment_errors_map_to_codes() {
    let ramp = GrayImage16::from_fn(64, 64, |x, y| (300 + x + 64 * (y % 7)) as u16).unwrap();
    let h = handle(&ramp);
    let mut res = ptr::null_mut();
    unsafe {
        let pre_done = CString::new(r#"{"pre_done": true, "smooth_window": 1}"#).unwrap();
        assert_eq!(spectral_segment(h, 0, pre_done.as_ptr(), &mut res), SpectralStatus::NoLoft);
        assert!(last_error().starts_with("no loft found in [300,800]"));
        assert_eq!(spectral_segment(h, 9, ptr::null(), &mut res), SpectralStatus::InvalidArgument);
        let bad = CString::new(r#"{"lo": "x"}"#).unwrap();
        assert_eq!(spectral_segment(h, 0, bad.as_ptr(), &mut res), SpectralStatus::InvalidArgument);
        let lesion_bounds = CString::new(r#"{"lo": 310}"#).unwrap();
        assert_eq!(spectral_segment(h, 1, lesion_bounds.as_ptr(), &mut res), SpectralStatus::InvalidArgument);
        assert!(res.is_null());
        let empty = handle(&GrayImage16::filled(16, 16, 0).unwrap());
        assert_eq!(spectral_segment(empty, 0, ptr::null(), &mut res), SpectralStatus::NoForeground);
        let small = handle(&GrayImage16::filled(4, 4, 0).unwrap());
        let mut m = SpectralMetrics::default();
        assert_eq!(spectral_metrics(h, small, &mut m), SpectralStatus::ShapeMismatch);
        spectral_image_free(small);
        spectral_image_free(empty);
        spectral_image_free(h);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage16::from_fn(7, 4, |x, y| (x * 9000 + y * 3) as u16).unwrap();
    let h = handle(&img);
    unsafe {
        for name in ["a.pgm", "a.png"] {
            let path = CString::new(dir.path().join(name).to_str().unwrap()).unwrap();
            assert_eq!(spectral_image_write(h, path.as_ptr()), SpectralStatus::Ok);
            let mut back = ptr::null_mut();
            assert_eq!(spectral_image_read(path.as_ptr(), &mut back), SpectralStatus::Ok);
            let mut buf = vec![0u16; 28];
            spectral_image_copy_pixels(back, buf.as_mut_ptr(), 28);
            assert_eq!(buf, img.pixels());
            spectral_image_free(back);
        }
        let bad = CString::new(dir.path().join("a.bmp").to_str().unwrap()).unwrap();
        assert_eq!(spectral_image_write(h, bad.as_ptr()), SpectralStatus::InvalidArgument);
        spectral_image_free(h);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(spectral_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn exported_symbols() -> Vec<String> {
    let src = std::fs::read_to_string(manifest_dir().join("src/lib.rs")).unwrap();
    src.lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn ").or(l.trim().strip_prefix("pub extern \"C\" fn ")))
        .map(|rest| rest.split('(').next().unwrap().to_string())
        .collect()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(manifest_dir().join("include/spectral_loft.h")).unwrap();
    let symbols = exported_symbols();
    assert!(symbols.len() >= 15, "{symbols:?}");
    for s in &symbols {
        assert!(header.contains(&format!(" {s}(")) || header.contains(&format!("*{s}(")), "{s} missing from header");
    }
    for ty in ["typedef struct SpectralImage SpectralImage;", "typedef struct SpectralResult SpectralResult;"] {
        assert!(header.contains(ty), "{ty}");
    }
    assert!(header.contains("SPECTRAL_STATUS_NO_LOFT = 7"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "spectral_loft.h"

int main(void) {
    uint16_t px[64 * 64];
    for (int y = 0; y < 64; y++)
        for (int x = 0; x < 64; x++) {
            int dx = x - 32, dy = y - 32;
            int in_body = dx * dx + dy * dy < 28 * 28;
            int dark = (dx * dx + dy * dy) < 12 * 12;
            px[y * 64 + x] = in_body ? (dark ? 450 + (x + y) % 7 : 1100 + (x * y) % 9) : 0;
        }
    SpectralImage *img = NULL;
    if (spectral_image_new(64, 64, px, &img) != SPECTRAL_STATUS_OK) return 10;
    SpectralResult *res = NULL;
    SpectralStatus s = spectral_segment(img, SPECTRAL_MODE_TISSUE, "{\"pre_done\": true, \"smooth_window\": 1}", &res);
    if (s != SPECTRAL_STATUS_OK) { fprintf(stderr, "%s\n", spectral_last_error()); return 11; }
    printf("%u\n", (unsigned)spectral_result_threshold(res));
    if (spectral_segment(NULL, 0, NULL, &res) != SPECTRAL_STATUS_NULL_ARGUMENT) return 12;
    if (strlen(spectral_last_error()) == 0) return 13;
    spectral_result_free(res);
    spectral_image_free(img);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libspectral_loft_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let threshold: u16 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(threshold > 456 && threshold < 1100, "{threshold}");
}
