//! C ABI over the `rtdcm` simulator, curve analysis, clustering and shape
//! matcher.
//!
//! Objects cross the boundary as opaque handles created by `rtdcm_*` calls
//! and released with the matching `*_free`. Every fallible call returns an
//! [`RtdcmStatus`]; the message of the most recent failure on the calling
//! thread is available from [`rtdcm_last_error`]. Points are packed as
//! `x, y, z` triples in millimetres.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::Vector3;
use rtdcm::geometry::{arc_length_parameterize, torsion_signature, AnalysisSettings, CrossingDirection, Curve3D};
use rtdcm::measurement::{dbscan, RawPointSet};
use rtdcm::rod::{solve_equilibrium, ActuationState, ManipulatorConfig, Shape};
use rtdcm::sequencer::{match_shape_with, MatchResult, MatchSettings};
use rtdcm::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtdcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfBounds = 3,
    SolverNotConverged = 4,
    ClusterCountMismatch = 5,
    ParseError = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Manipulator geometry, material and mass parameters.
pub struct RtdcmConfig(ManipulatorConfig);

/// Equilibrium shape: base plate plus one center per disk.
pub struct RtdcmShape(Shape);

/// Outcome of the sequential shape matcher.
pub struct RtdcmMatch(MatchResult);

/// One torsion sign change. `direction` is +1 for negative-to-positive
/// and -1 for positive-to-negative.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtdcmSignChange {
    pub s_pos_mm: f64,
    pub nearest_disk: u32,
    pub direction: i32,
    pub magnitude: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtdcmMetrics {
    pub shape_rmse_cm: f64,
    pub curvature_rmse_per_cm: f64,
    pub tip_error_mm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RtdcmStatus {
    match e.root() {
        Error::OutOfBounds(_) => RtdcmStatus::OutOfBounds,
        Error::SolverNotConverged { .. } => RtdcmStatus::SolverNotConverged,
        Error::ClusterCountMismatch { .. } => RtdcmStatus::ClusterCountMismatch,
        Error::Parse { .. } | Error::Json(_) => RtdcmStatus::ParseError,
        _ => RtdcmStatus::InvalidArgument,
    }
}

fn fail(status: RtdcmStatus, msg: &str) -> RtdcmStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), RtdcmStatus>>(f: F) -> RtdcmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RtdcmStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(RtdcmStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: rtdcm::Result<T>) -> Result<T, RtdcmStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn null(what: &str) -> RtdcmStatus {
    fail(RtdcmStatus::NullPointer, &format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], RtdcmStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn curve_from(points: *const f64, n_points: usize) -> Result<Curve3D, RtdcmStatus> {
    let xyz = slice(points, n_points.checked_mul(3).ok_or(RtdcmStatus::InvalidArgument)?, "points")?;
    let pts = xyz.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
    lift(arc_length_parameterize(pts))
}

unsafe fn config_ref<'a>(config: *const RtdcmConfig) -> Result<&'a ManipulatorConfig, RtdcmStatus> {
    config.as_ref().map(|c| &c.0).ok_or_else(|| null("config"))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), RtdcmStatus> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread (empty after success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rtdcm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default configuration. Release with [`rtdcm_config_free`].
#[no_mangle]
pub extern "C" fn rtdcm_config_default() -> *mut RtdcmConfig {
    Box::into_raw(Box::new(RtdcmConfig(ManipulatorConfig::default())))
}

/// Parses and validates a configuration from NUL-terminated JSON.
///
/// # Safety
/// `json` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_config_from_json(json: *const c_char, out: *mut *mut RtdcmConfig) -> RtdcmStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(RtdcmStatus::ParseError, "json is not UTF-8"))?;
        let cfg: ManipulatorConfig = lift(serde_json::from_str(text).map_err(Error::from))?;
        lift(cfg.validate())?;
        write_out(out, RtdcmConfig(cfg))
    })
}

/// Number of rotatable disks in the configuration (0 for null).
///
/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_config_disk_count(config: *const RtdcmConfig) -> usize {
    config.as_ref().map_or(0, |c| c.0.n_disks)
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_config_free(config: *mut RtdcmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Solves the equilibrium for a tendon displacement (mm) and one angle
/// (deg) per disk.
///
/// # Safety
/// `angles_deg` must hold `n_angles` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_simulate(
    config: *const RtdcmConfig,
    tendon_mm: f64,
    angles_deg: *const f64,
    n_angles: usize,
    out: *mut *mut RtdcmShape,
) -> RtdcmStatus {
    guard(|| {
        let cfg = config_ref(config)?;
        let angles = slice(angles_deg, n_angles, "angles_deg")?;
        if angles.len() != cfg.n_disks {
            return Err(fail(
                RtdcmStatus::InvalidArgument,
                &format!("expected {} disk angles, got {}", cfg.n_disks, angles.len()),
            ));
        }
        let act = lift(ActuationState::new(tendon_mm, angles.to_vec()))?;
        let report = lift(solve_equilibrium(cfg, &act, None))?;
        if !report.converged {
            return Err(fail(
                RtdcmStatus::SolverNotConverged,
                &format!("solver stopped after {} iterations", report.iterations),
            ));
        }
        write_out(out, RtdcmShape(report.shape))
    })
}

/// Number of centers in the shape (base plate plus disks).
///
/// # Safety
/// `shape` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_shape_center_count(shape: *const RtdcmShape) -> usize {
    shape.as_ref().map_or(0, |s| s.0.disk_centers.len())
}

/// Copies the centers as `x, y, z` triples into `out` (room for `capacity`
/// doubles).
///
/// # Safety
/// `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_shape_centers(shape: *const RtdcmShape, out: *mut f64, capacity: usize) -> RtdcmStatus {
    guard(|| {
        let s = shape.as_ref().ok_or_else(|| null("shape"))?;
        let need = 3 * s.0.disk_centers.len();
        if capacity < need {
            return Err(fail(RtdcmStatus::BufferTooSmall, &format!("need {need} doubles")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        for (i, c) in s.0.disk_centers.iter().enumerate() {
            for k in 0..3 {
                *out.add(3 * i + k) = c[k];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `shape` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_shape_free(shape: *mut RtdcmShape) {
    if !shape.is_null() {
        drop(Box::from_raw(shape));
    }
}

/// Torsion sign changes of a curve of `n_points` points. Writes up to
/// `capacity` entries and the total count to `n_found`.
///
/// # Safety
/// `points` must hold `3 * n_points` doubles, `out` room for `capacity`
/// entries and `n_found` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_analyze(
    config: *const RtdcmConfig,
    points: *const f64,
    n_points: usize,
    threshold_rel: f64,
    out: *mut RtdcmSignChange,
    capacity: usize,
    n_found: *mut usize,
) -> RtdcmStatus {
    guard(|| {
        let cfg = config_ref(config)?;
        if n_found.is_null() {
            return Err(null("n_found"));
        }
        if !(threshold_rel > 0.0 && threshold_rel < 1.0) {
            return Err(fail(RtdcmStatus::InvalidArgument, "threshold_rel must lie in (0, 1)"));
        }
        let curve = curve_from(points, n_points)?;
        let settings = AnalysisSettings {
            threshold_rel,
            ..AnalysisSettings::default()
        };
        let sig = lift(torsion_signature(&curve, &cfg.disk_arc_positions(), &settings))?;
        *n_found = sig.sign_changes.len();
        if capacity > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, c) in sig.sign_changes.iter().take(capacity).enumerate() {
            *out.add(i) = RtdcmSignChange {
                s_pos_mm: c.s_pos,
                nearest_disk: c.nearest_disk as u32,
                direction: match c.direction {
                    CrossingDirection::NegToPos => 1,
                    CrossingDirection::PosToNeg => -1,
                },
                magnitude: c.magnitude,
            };
        }
        if capacity < sig.sign_changes.len() {
            return Err(fail(RtdcmStatus::BufferTooSmall, "more sign changes than capacity"));
        }
        Ok(())
    })
}

/// Runs the sequential matcher on a target curve.
///
/// # Safety
/// `points` must hold `3 * n_points` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match(
    config: *const RtdcmConfig,
    points: *const f64,
    n_points: usize,
    out: *mut *mut RtdcmMatch,
) -> RtdcmStatus {
    guard(|| {
        let cfg = config_ref(config)?;
        let curve = curve_from(points, n_points)?;
        let result = lift(match_shape_with(&curve, cfg, &MatchSettings::default()))?;
        write_out(out, RtdcmMatch(result))
    })
}

/// Recovered tendon displacement (mm), NaN for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match_tendon_mm(m: *const RtdcmMatch) -> f64 {
    m.as_ref().map_or(f64::NAN, |m| m.0.tendon_mm)
}

/// Copies the recovered disk angles (deg) into `out`.
///
/// # Safety
/// `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match_angles(m: *const RtdcmMatch, out: *mut f64, capacity: usize) -> RtdcmStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("match"))?;
        let a = &m.0.disk_angles_deg;
        if capacity < a.len() {
            return Err(fail(RtdcmStatus::BufferTooSmall, &format!("need {} doubles", a.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), out, a.len());
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match_metrics(m: *const RtdcmMatch, out: *mut RtdcmMetrics) -> RtdcmStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("match"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = m.0.metrics;
        *out = RtdcmMetrics {
            shape_rmse_cm: x.shape_rmse_cm,
            curvature_rmse_per_cm: x.curvature_rmse_per_cm,
            tip_error_mm: x.tip_error_mm,
        };
        Ok(())
    })
}

/// Full match report as JSON. Release with [`rtdcm_string_free`]; null on
/// failure.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match_to_json(m: *const RtdcmMatch) -> *mut c_char {
    let Some(m) = m.as_ref() else {
        null("match");
        return ptr::null_mut();
    };
    match rtdcm::io::to_json(&m.0).ok().and_then(|s| CString::new(s).ok()) {
        Some(c) => c.into_raw(),
        None => {
            set_error("serialization failed");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_match_free(m: *mut RtdcmMatch) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// DBSCAN over `n_points` points. Writes one cluster label per point
/// (-1 for noise) and the cluster count.
///
/// # Safety
/// `points` must hold `3 * n_points` doubles, `labels` `n_points` values
/// and `n_clusters` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rtdcm_dbscan(
    points: *const f64,
    n_points: usize,
    eps_mm: f64,
    min_pts: usize,
    labels: *mut i64,
    n_clusters: *mut usize,
) -> RtdcmStatus {
    guard(|| {
        if labels.is_null() || n_clusters.is_null() {
            return Err(null("labels or n_clusters"));
        }
        let xyz = slice(points, n_points.checked_mul(3).ok_or(RtdcmStatus::InvalidArgument)?, "points")?;
        let set = lift(RawPointSet::new(
            xyz.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect(),
        ))?;
        let r = lift(dbscan(&set, eps_mm, min_pts))?;
        for (i, l) in r.labels(n_points).into_iter().enumerate() {
            *labels.add(i) = l.map_or(-1, |c| c as i64);
        }
        *n_clusters = r.clusters.len();
        Ok(())
    })
}
