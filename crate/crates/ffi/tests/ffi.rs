use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rtdcm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rtdcm_last_error()) }.to_string_lossy().into_owned()
}

fn simulate(cfg: *const RtdcmConfig, tendon: f64, angles: &[f64]) -> (RtdcmStatus, *mut RtdcmShape) {
    let mut shape = ptr::null_mut();
    let st = unsafe { rtdcm_simulate(cfg, tendon, angles.as_ptr(), angles.len(), &mut shape) };
    (st, shape)
}

fn centers(shape: *const RtdcmShape) -> Vec<f64> {
    let n = unsafe { rtdcm_shape_center_count(shape) };
    let mut buf = vec![0.0; 3 * n];
    assert_eq!(unsafe { rtdcm_shape_centers(shape, buf.as_mut_ptr(), buf.len()) }, RtdcmStatus::Ok);
    buf
}

#[test]
fn simulate_and_read_centers() {
    let cfg = rtdcm_config_default();
    assert_eq!(unsafe { rtdcm_config_disk_count(cfg) }, 9);
    let (st, shape) = simulate(cfg, 0.0, &[0.0; 9]);
    assert_eq!(st, RtdcmStatus::Ok, "{}", last_error());
    let c = centers(shape);
    assert_eq!(c.len(), 30);
    assert_eq!(&c[0..3], &[0.0, 0.0, 0.0]);
    assert!(c[29] < -500.0);
    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { rtdcm_shape_centers(shape, small.as_mut_ptr(), small.len()) },
        RtdcmStatus::BufferTooSmall
    );
    unsafe {
        rtdcm_shape_free(shape);
        rtdcm_config_free(cfg);
    }
}

#[test]
fn error_codes() {
    let cfg = rtdcm_config_default();
    let mut angles = [0.0; 9];
    angles[4] = -95.0;
    let (st, shape) = simulate(cfg, 10.0, &angles);
    assert_eq!(st, RtdcmStatus::OutOfBounds);
    assert!(shape.is_null());
    assert!(last_error().contains("90"));
    assert_eq!(simulate(cfg, 10.0, &[0.0; 3]).0, RtdcmStatus::InvalidArgument);
    assert_eq!(simulate(ptr::null(), 10.0, &[0.0; 9]).0, RtdcmStatus::NullPointer);

    let bad = CString::new("{\"n_disks\": 1}").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rtdcm_config_from_json(bad.as_ptr(), &mut out) }, RtdcmStatus::InvalidArgument);
    let junk = CString::new("{not json").unwrap();
    assert_eq!(unsafe { rtdcm_config_from_json(junk.as_ptr(), &mut out) }, RtdcmStatus::ParseError);
    let good = CString::new("{\"disk_mass_g\": 20}").unwrap();
    assert_eq!(unsafe { rtdcm_config_from_json(good.as_ptr(), &mut out) }, RtdcmStatus::Ok);
    assert!(!out.is_null());
    unsafe {
        rtdcm_config_free(out);
        rtdcm_config_free(cfg);
        rtdcm_config_free(ptr::null_mut());
        rtdcm_shape_free(ptr::null_mut());
        rtdcm_match_free(ptr::null_mut());
        rtdcm_string_free(ptr::null_mut());
    }
}

#[test]
fn analyze_and_match_round_trip() {
    let cfg = rtdcm_config_default();
    let mut angles = [0.0; 9];
    angles[4] = -70.0;
    let (st, shape) = simulate(cfg, 100.0, &angles);
    assert_eq!(st, RtdcmStatus::Ok, "{}", last_error());
    let disks = centers(shape)[3..].to_vec();
    let n = disks.len() / 3;

    let mut found = 0usize;
    let mut changes = [RtdcmSignChange {
        s_pos_mm: 0.0,
        nearest_disk: 0,
        direction: 0,
        magnitude: 0.0,
    }; 4];
    let st = unsafe { rtdcm_analyze(cfg, disks.as_ptr(), n, 0.1, changes.as_mut_ptr(), changes.len(), &mut found) };
    assert_eq!(st, RtdcmStatus::Ok, "{}", last_error());
    assert_eq!(found, 1);
    assert!((4..=6).contains(&changes[0].nearest_disk));
    assert_eq!(changes[0].direction, -1);

    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rtdcm_match(cfg, disks.as_ptr(), n, &mut m) }, RtdcmStatus::Ok, "{}", last_error());
    let t = unsafe { rtdcm_match_tendon_mm(m) };
    assert!((t - 100.0).abs() <= 15.0);
    let mut a = [0.0; 9];
    assert_eq!(unsafe { rtdcm_match_angles(m, a.as_mut_ptr(), a.len()) }, RtdcmStatus::Ok);
    assert!(a[3..6].iter().any(|x| *x < -50.0));
    let mut metrics = RtdcmMetrics {
        shape_rmse_cm: 0.0,
        curvature_rmse_per_cm: 0.0,
        tip_error_mm: 0.0,
    };
    assert_eq!(unsafe { rtdcm_match_metrics(m, &mut metrics) }, RtdcmStatus::Ok);
    assert!(metrics.shape_rmse_cm <= 1.0);
    let json = unsafe { rtdcm_match_to_json(m) };
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    assert!(text.contains("\"hypotheses\"") && text.contains("Counterclockwise"));
    unsafe {
        rtdcm_string_free(json);
        rtdcm_match_free(m);
        rtdcm_shape_free(shape);
        rtdcm_config_free(cfg);
    }
}

#[test]
fn dbscan_labels() {
    let pts = [0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 50.0, 0.0, 0.0];
    let mut labels = [7i64; 4];
    let mut n = 0usize;
    let st = unsafe { rtdcm_dbscan(pts.as_ptr(), 4, 1.0, 3, labels.as_mut_ptr(), &mut n) };
    assert_eq!(st, RtdcmStatus::Ok);
    assert_eq!(n, 1);
    assert_eq!(labels, [0, 0, 0, -1]);
    let st = unsafe { rtdcm_dbscan(pts.as_ptr(), 4, -1.0, 3, labels.as_mut_ptr(), &mut n) };
    assert_eq!(st, RtdcmStatus::InvalidArgument);
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("rtdcm.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).expect("generated header");
    for name in [
        "rtdcm_last_error",
        "rtdcm_config_default",
        "rtdcm_config_from_json",
        "rtdcm_simulate",
        "rtdcm_shape_centers",
        "rtdcm_analyze",
        "rtdcm_match",
        "rtdcm_match_to_json",
        "rtdcm_dbscan",
        "rtdcm_string_free",
        "typedef struct RtdcmShape RtdcmShape",
        "RTDCM_STATUS_SOLVER_NOT_CONVERGED = 4",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "rtdcm.h"

int main(void) {
    RtdcmConfig *cfg = rtdcm_config_default();
    double angles[9] = {0};
    RtdcmShape *shape = NULL;
    if (rtdcm_simulate(cfg, 50.0, angles, 9, &shape) != RTDCM_STATUS_OK) {
        fprintf(stderr, "%s\n", rtdcm_last_error());
        return 1;
    }
    double xyz[30];
    if (rtdcm_shape_centers(shape, xyz, 30) != RTDCM_STATUS_OK) return 2;
    angles[4] = 120.0;
    RtdcmShape *bad = NULL;
    if (rtdcm_simulate(cfg, 50.0, angles, 9, &bad) != RTDCM_STATUS_OUT_OF_BOUNDS) return 3;
    printf("%.3f\n", xyz[29]);
    rtdcm_shape_free(shape);
    rtdcm_config_free(cfg);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_library() {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = target_dir.join("librtdcm_ffi.so");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or shared library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg("-L")
        .arg(&target_dir)
        .arg("-lrtdcm_ffi")
        .arg(format!("-Wl,-rpath,{}", target_dir.display()))
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program failed: {}", String::from_utf8_lossy(&out.stderr));
    let tip_z: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(tip_z < -400.0);
}
