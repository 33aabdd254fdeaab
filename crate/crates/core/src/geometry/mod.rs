//! Differential geometry of sampled backbone curves.

mod curve;
mod sign_change;
mod smoothing;

pub use curve::{
    arc_length_parameterize, ct_profile, CTProfile, Curve3D, EPS_CROSS, MIN_CHORD_MM,
    MIN_CURVE_POINTS,
};
pub use sign_change::{
    nearest_disk, relative_threshold, torsion_sign_changes, CrossingDirection, SignChange,
    DEFAULT_THRESHOLD_REL,
};
pub use smoothing::{
    smooth_profile, smooth_profile_or_flat, uniform_grid, SmoothingParams, SmoothingSpline,
    DEFAULT_GRID_POINTS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw profile followed by smoothing; curves too straight to carry torsion
/// come back with a flat torsion channel instead of an error.
pub fn analyze_curve(curve: &Curve3D, params: &SmoothingParams) -> Result<CTProfile> {
    smooth_profile_or_flat(&ct_profile(curve)?, params)
}

/// The curve's points at the disks, located by arc-length fraction along
/// the backbone (`disk_s` holds the nominal disk arc positions, first at 0).
pub fn disk_samples(curve: &Curve3D, disk_s: &[f64]) -> Result<Curve3D> {
    let total = match disk_s.last() {
        Some(&t) if disk_s.len() >= MIN_CURVE_POINTS && t > 0.0 => t,
        _ => return Err(Error::InvalidParams("need at least 4 increasing disk positions".into())),
    };
    if disk_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("disk positions must be strictly increasing".into()));
    }
    if curve.len() == disk_s.len() {
        return Ok(curve.clone());
    }
    let fractions: Vec<f64> = disk_s.iter().map(|s| s / total).collect();
    curve.resample_fractions(&fractions)
}

/// How a backbone curve is reduced to its torsion signature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub smoothing: SmoothingParams,
    /// Sign-change threshold relative to the largest lobe turning angle.
    pub threshold_rel: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            smoothing: SmoothingParams::interpolating(),
            threshold_rel: DEFAULT_THRESHOLD_REL,
        }
    }
}

/// Smoothed C-T profile of the disk samples and its torsion sign changes.
#[derive(Debug, Clone, Serialize)]
pub struct TorsionSignature {
    pub profile: CTProfile,
    /// Arc positions of the disks on the sampled curve.
    pub disk_s: Vec<f64>,
    /// Absolute threshold applied (rad).
    pub threshold: f64,
    pub sign_changes: Vec<SignChange>,
}

/// Samples `curve` at the disks, smooths its C-T profile and locates
/// torsion sign changes.
pub fn torsion_signature(curve: &Curve3D, disk_s: &[f64], settings: &AnalysisSettings) -> Result<TorsionSignature> {
    let samples = disk_samples(curve, disk_s)?;
    let profile = analyze_curve(&samples, &settings.smoothing)?;
    let disk_s = samples.arc().to_vec();
    let threshold = relative_threshold(&profile, &disk_s, settings.threshold_rel);
    let sign_changes = torsion_sign_changes(&profile, &disk_s, threshold);
    Ok(TorsionSignature {
        profile,
        disk_s,
        threshold,
        sign_changes,
    })
}
