//! Sequential actuation framework: recover an actuation that reproduces a
//! target backbone shape in four one-dimensional steps.
//!
//! 1. Torsion sign changes of the target locate rotated disks and their
//!    directions.
//! 2. With those disks at full deflection, the tendon displacement is
//!    searched to match the target curvature.
//! 3. Each hypothesized disk's rotation magnitude is searched, proximal to
//!    distal, to match the target disk centers.
//! 4. The second-to-last disk fine-tunes the tip.

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    analyze_curve, disk_samples, torsion_signature, AnalysisSettings, CTProfile, CrossingDirection,
    Curve3D, SignChange,
};
use crate::optimize::{
    golden_section, rmse_curvature, rmse_shape, tip_error, GoldenSearchSpec, IndexRange, SearchTrace,
};
use crate::rod::{solve_equilibrium, ActuationState, ManipulatorConfig, Shape, MAX_DISK_ANGLE_DEG, MAX_TENDON_MM};

/// Sign changes nearest this disk or beyond are left to tip fine-tuning.
pub const DEFER_FROM_DISK: usize = 7;

/// Rotation direction viewed from the tip toward the base (from below the
/// suspended manipulator). Clockwise is a positive disk angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Clockwise,
    Counterclockwise,
}

impl Direction {
    /// Rotation direction that produces a torsion crossing of this kind.
    pub fn from_crossing(c: CrossingDirection) -> Direction {
        match c {
            CrossingDirection::NegToPos => Direction::Clockwise,
            CrossingDirection::PosToNeg => Direction::Counterclockwise,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Clockwise => 1.0,
            Direction::Counterclockwise => -1.0,
        }
    }

    pub fn of_angle(deg: f64) -> Direction {
        if deg >= 0.0 {
            Direction::Clockwise
        } else {
            Direction::Counterclockwise
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskHypothesis {
    /// 1-based disk index.
    pub disk_index: usize,
    pub direction: Direction,
    pub source_sign_change: SignChange,
    /// Handled by tip fine-tuning instead of a dedicated angle search.
    pub deferred: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchSettings {
    pub analysis: AnalysisSettings,
    pub tendon_tol_mm: f64,
    pub angle_step_deg: f64,
    /// Half-width of the tip fine-tuning window (deg).
    pub tip_window_deg: f64,
    pub max_evals: usize,
}

impl Default for MatchSettings {
    fn default() -> Self {
        MatchSettings {
            analysis: AnalysisSettings::default(),
            tendon_tol_mm: 1.0,
            angle_step_deg: 1.0,
            tip_window_deg: 20.0,
            max_evals: 60,
        }
    }
}

/// Target shape reduced to what the steps compare against.
#[derive(Debug, Clone)]
pub struct Target {
    /// Target points at the disks.
    pub samples: Curve3D,
    /// Base plate followed by the disk points, indexed like
    /// [`Shape::disk_centers`].
    pub centers: Vec<Vector3<f64>>,
    pub profile: CTProfile,
}

/// A target needs at least one sample per disk.
fn check_target(curve: &Curve3D, config: &ManipulatorConfig) -> Result<()> {
    config.validate()?;
    if curve.len() < config.n_disks {
        return Err(Error::TooFewPoints {
            found: curve.len(),
            required: config.n_disks,
        });
    }
    Ok(())
}

impl Target {
    pub fn new(curve: &Curve3D, config: &ManipulatorConfig, settings: &AnalysisSettings) -> Result<Target> {
        check_target(curve, config)?;
        let samples = disk_samples(curve, &config.disk_arc_positions())?;
        let profile = analyze_curve(&samples, &settings.smoothing)?;
        let mut centers = vec![samples.first()];
        centers.extend_from_slice(samples.points());
        Ok(Target {
            samples,
            centers,
            profile,
        })
    }
}

/// Attained state after one step.
#[derive(Debug, Clone)]
pub struct StepState {
    pub step: &'static str,
    pub actuation: ActuationState,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub shape_rmse_cm: f64,
    pub curvature_rmse_per_cm: f64,
    pub tip_error_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleTrace {
    pub disk_index: usize,
    pub trace: SearchTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTraces {
    pub tendon: SearchTrace,
    pub angles: Vec<AngleTrace>,
    pub tip: SearchTrace,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub hypotheses: Vec<DiskHypothesis>,
    pub tendon_mm: f64,
    pub disk_angles_deg: Vec<f64>,
    pub metrics: Metrics,
    pub traces: StepTraces,
    #[serde(skip)]
    pub attained_shape: Shape,
    /// State after steps 2, 3 and 4.
    #[serde(skip)]
    pub steps: Vec<StepState>,
}

impl MatchResult {
    pub fn actuation(&self) -> Result<ActuationState> {
        ActuationState::new(self.tendon_mm, self.disk_angles_deg.clone())
    }
}

/// Converged equilibrium shape, solved from the straight rod.
pub fn forward_shape(config: &ManipulatorConfig, act: &ActuationState) -> Result<Shape> {
    let report = solve_equilibrium(config, act, None)?;
    if !report.converged {
        return Err(Error::SolverNotConverged {
            iterations: report.iterations,
            gradient: report.gradient_inf_norm,
        });
    }
    Ok(report.shape)
}

fn attained_profile(shape: &Shape, settings: &AnalysisSettings) -> Result<CTProfile> {
    analyze_curve(&shape.disk_curve()?, &settings.smoothing)
}

/// Full-shape comparison range: every disk.
pub fn full_range(config: &ManipulatorConfig) -> IndexRange {
    IndexRange::new(1, config.n_disks)
}

/// Comparison range while solving hypothesis `i` of a list.
fn angle_range(hyps: &[DiskHypothesis], i: usize, config: &ManipulatorConfig) -> IndexRange {
    if i + 1 == hyps.len() {
        full_range(config)
    } else {
        IndexRange::new(1, (hyps[i].disk_index + 2).min(config.n_disks))
    }
}

/// Distal range used for tip fine-tuning: disks 7 through the tip.
pub fn tip_range(config: &ManipulatorConfig) -> IndexRange {
    IndexRange::new(config.n_disks.saturating_sub(2).max(1), config.n_disks)
}

fn tip_disk(config: &ManipulatorConfig) -> usize {
    config.n_disks - 1
}

/// Step 1: one hypothesis per torsion sign change, ordered proximal to
/// distal. When two crossings share a nearest disk the stronger one wins.
pub fn step1_identify(
    target: &Curve3D,
    config: &ManipulatorConfig,
    settings: &AnalysisSettings,
) -> Result<Vec<DiskHypothesis>> {
    check_target(target, config)?;
    let sig = torsion_signature(target, &config.disk_arc_positions(), settings)?;
    Ok(hypotheses_from(&sig.sign_changes))
}

pub fn hypotheses_from(sign_changes: &[SignChange]) -> Vec<DiskHypothesis> {
    let mut hyps: Vec<DiskHypothesis> = Vec::new();
    for sc in sign_changes {
        let h = DiskHypothesis {
            disk_index: sc.nearest_disk,
            direction: Direction::from_crossing(sc.direction),
            source_sign_change: *sc,
            deferred: sc.nearest_disk >= DEFER_FROM_DISK,
        };
        match hyps.iter_mut().find(|o| o.disk_index == h.disk_index) {
            Some(o) if o.source_sign_change.magnitude < sc.magnitude => *o = h,
            Some(_) => {}
            None => hyps.push(h),
        }
    }
    hyps.sort_by_key(|h| h.disk_index);
    hyps
}

fn active(hyps: &[DiskHypothesis]) -> Vec<DiskHypothesis> {
    hyps.iter().filter(|h| !h.deferred).copied().collect()
}

/// Step 2: hypothesized disks at full deflection, tendon searched over
/// [0, 140] mm against the target curvature.
pub fn step2_tendon(
    target: &Target,
    hyps: &[DiskHypothesis],
    config: &ManipulatorConfig,
    settings: &MatchSettings,
) -> Result<SearchTrace> {
    let mut base = ActuationState::tendon_only(0.0, config.n_disks)?;
    for h in active(hyps) {
        base = base.with_angle(h.disk_index, h.direction.sign() * MAX_DISK_ANGLE_DEG)?;
    }
    let spec = GoldenSearchSpec::new(0.0, MAX_TENDON_MM, settings.tendon_tol_mm)
        .with_entry(0.0)
        .with_max_evals(settings.max_evals);
    golden_section(
        |delta| {
            let shape = forward_shape(config, &base.with_tendon(delta)?)
                .map_err(|e| e.in_step(format!("step 2 at tendon {delta:.3} mm")))?;
            rmse_curvature(&target.profile, &attained_profile(&shape, &settings.analysis)?)
        },
        spec,
    )
}

/// Step 3: rotation magnitudes for the non-deferred hypotheses, proximal
/// to distal. Unsolved hypotheses stay at full deflection. Returns the
/// per-disk traces and the resulting actuation.
pub fn step3_angles(
    target: &Target,
    hyps: &[DiskHypothesis],
    tendon_mm: f64,
    config: &ManipulatorConfig,
    settings: &MatchSettings,
) -> Result<(Vec<AngleTrace>, ActuationState)> {
    let hyps = active(hyps);
    let mut act = ActuationState::tendon_only(tendon_mm, config.n_disks)?;
    for h in &hyps {
        act = act.with_angle(h.disk_index, h.direction.sign() * MAX_DISK_ANGLE_DEG)?;
    }
    let mut traces = Vec::new();
    for (i, h) in hyps.iter().enumerate() {
        let range = angle_range(&hyps, i, config);
        let spec = GoldenSearchSpec::new(0.0, MAX_DISK_ANGLE_DEG, settings.angle_step_deg)
            .quantized(settings.angle_step_deg)
            .with_entry(MAX_DISK_ANGLE_DEG)
            .with_max_evals(settings.max_evals);
        let trace = golden_section(
            |m| {
                let trial = act.with_angle(h.disk_index, h.direction.sign() * m)?;
                let shape = forward_shape(config, &trial).map_err(|e| {
                    e.in_step(format!("step 3 at disk {} angle {:.3} deg", h.disk_index, h.direction.sign() * m))
                })?;
                rmse_shape(&target.centers, &shape.disk_centers, range)
            },
            spec,
        )?;
        act = act.with_angle(h.disk_index, h.direction.sign() * trace.best_x)?;
        traces.push(AngleTrace {
            disk_index: h.disk_index,
            trace,
        });
    }
    Ok((traces, act))
}

/// Step 4: the second-to-last disk searched within the tip window against
/// the distal disk centers.
pub fn step4_tip(
    target: &Target,
    state: &ActuationState,
    config: &ManipulatorConfig,
    settings: &MatchSettings,
) -> Result<(SearchTrace, ActuationState)> {
    let k = tip_disk(config);
    let range = tip_range(config);
    let w = settings.tip_window_deg;
    let spec = GoldenSearchSpec::new(-w, w, settings.angle_step_deg)
        .quantized(settings.angle_step_deg)
        .with_entry(state.angle(k).clamp(-w, w))
        .with_max_evals(settings.max_evals);
    let trace = golden_section(
        |x| {
            let shape = forward_shape(config, &state.with_angle(k, x)?)
                .map_err(|e| e.in_step(format!("step 4 at disk {k} angle {x:.3} deg")))?;
            rmse_shape(&target.centers, &shape.disk_centers, range)
        },
        spec,
    )?;
    let act = state.with_angle(k, trace.best_x)?;
    Ok((trace, act))
}

/// Full-shape, curvature and tip metrics of an attained shape.
pub fn metrics(target: &Target, shape: &Shape, config: &ManipulatorConfig, settings: &AnalysisSettings) -> Result<Metrics> {
    Ok(Metrics {
        shape_rmse_cm: rmse_shape(&target.centers, &shape.disk_centers, full_range(config))?,
        curvature_rmse_per_cm: rmse_curvature(&target.profile, &attained_profile(shape, settings)?)?,
        tip_error_mm: tip_error(&target.centers, &shape.disk_centers),
    })
}

fn labeled<T>(r: Result<T>, step: &'static str) -> Result<T> {
    r.map_err(|e| match e {
        Error::Step { .. } => e,
        other => other.in_step(step),
    })
}

/// Runs steps 1 through 4 on `target` with default settings.
pub fn match_shape(target: &Curve3D, config: &ManipulatorConfig) -> Result<MatchResult> {
    match_shape_with(target, config, &MatchSettings::default())
}

pub fn match_shape_with(target: &Curve3D, config: &ManipulatorConfig, settings: &MatchSettings) -> Result<MatchResult> {
    let tgt = labeled(Target::new(target, config, &settings.analysis), "target")?;
    let hyps = labeled(step1_identify(target, config, &settings.analysis), "step 1")?;

    let tendon = labeled(step2_tendon(&tgt, &hyps, config, settings), "step 2")?;
    let mut after2 = ActuationState::tendon_only(tendon.best_x, config.n_disks)?;
    for h in active(&hyps) {
        after2 = after2.with_angle(h.disk_index, h.direction.sign() * MAX_DISK_ANGLE_DEG)?;
    }

    let (angles, after3) = labeled(step3_angles(&tgt, &hyps, tendon.best_x, config, settings), "step 3")?;
    let (tip, after4) = labeled(step4_tip(&tgt, &after3, config, settings), "step 4")?;

    let mut steps = Vec::new();
    for (step, act) in [("step 2", after2), ("step 3", after3), ("step 4", after4.clone())] {
        let shape = labeled(forward_shape(config, &act), step)?;
        steps.push(StepState {
            step,
            actuation: act,
            shape,
        });
    }
    let attained = steps[2].shape.clone();
    let metrics = labeled(metrics(&tgt, &attained, config, &settings.analysis), "metrics")?;
    Ok(MatchResult {
        hypotheses: hyps,
        tendon_mm: after4.tendon_displacement(),
        disk_angles_deg: after4.disk_angles().to_vec(),
        metrics,
        traces: StepTraces { tendon, angles, tip },
        attained_shape: attained,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crossing(disk: usize, dir: CrossingDirection, magnitude: f64) -> SignChange {
        SignChange {
            s_pos: 70.0 * (disk as f64 - 1.0),
            nearest_disk: disk,
            direction: dir,
            magnitude,
        }
    }

    #[test]
    fn hypotheses_mapping_and_deferral() {
        let h = hypotheses_from(&[
            crossing(4, CrossingDirection::NegToPos, 0.3),
            crossing(6, CrossingDirection::PosToNeg, 0.2),
            crossing(8, CrossingDirection::NegToPos, 0.1),
        ]);
        assert_eq!(h.len(), 3);
        assert_eq!((h[0].disk_index, h[0].direction, h[0].deferred), (4, Direction::Clockwise, false));
        assert_eq!((h[1].disk_index, h[1].direction, h[1].deferred), (6, Direction::Counterclockwise, false));
        assert!(h[2].deferred);
    }

    #[test]
    fn duplicate_disk_keeps_stronger_crossing() {
        let h = hypotheses_from(&[
            crossing(5, CrossingDirection::NegToPos, 0.1),
            crossing(5, CrossingDirection::PosToNeg, 0.4),
        ]);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].direction, Direction::Counterclockwise);
    }

    #[test]
    fn ranges() {
        let cfg = ManipulatorConfig::default();
        assert_eq!(tip_range(&cfg), IndexRange::new(7, 9));
        assert_eq!(full_range(&cfg), IndexRange::new(1, 9));
        let h = hypotheses_from(&[
            crossing(4, CrossingDirection::NegToPos, 0.3),
            crossing(6, CrossingDirection::PosToNeg, 0.2),
        ]);
        assert_eq!(angle_range(&h, 0, &cfg), IndexRange::new(1, 6));
        assert_eq!(angle_range(&h, 1, &cfg), IndexRange::new(1, 9));
    }
}
