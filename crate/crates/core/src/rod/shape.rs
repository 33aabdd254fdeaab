use nalgebra::{Matrix3, Vector3};

use super::actuation::ActuationState;
use super::config::ManipulatorConfig;
use super::model::{hole_offset, path_length, LOCAL_TANGENT};
use crate::error::{Error, Result};
use crate::geometry::{arc_length_parameterize, Curve3D};

/// Equilibrium backbone: base plate plus one center/frame per disk, and the
/// dense node curve.
///
/// Index 0 is the base plate and index `k` is disk `k`; disk 1 is mounted at
/// the clamp, so indices 0 and 1 share a center.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub disk_centers: Vec<Vector3<f64>>,
    pub disk_frames: Vec<Matrix3<f64>>,
    pub dense_curve: Curve3D,
}

impl Shape {
    pub(crate) fn new(
        disk_centers: Vec<Vector3<f64>>,
        disk_frames: Vec<Matrix3<f64>>,
        dense_curve: Curve3D,
    ) -> Shape {
        Shape {
            disk_centers,
            disk_frames,
            dense_curve,
        }
    }

    /// Undeformed backbone hanging straight down from the base.
    pub fn straight(config: &ManipulatorConfig) -> Result<Shape> {
        config.validate()?;
        let seg = config.segment_length();
        let mut centers = vec![Vector3::zeros()];
        for k in 0..config.n_disks {
            centers.push(LOCAL_TANGENT * (seg * k as f64));
        }
        let frames = vec![Matrix3::identity(); config.n_disks + 1];
        let l = config.element_length();
        let nodes = (0..=config.n_elements())
            .map(|i| LOCAL_TANGENT * (l * i as f64))
            .collect();
        Ok(Shape::new(centers, frames, arc_length_parameterize(nodes)?))
    }

    pub fn n_disks(&self) -> usize {
        self.disk_centers.len() - 1
    }

    pub fn tip(&self) -> Vector3<f64> {
        self.disk_centers[self.disk_centers.len() - 1]
    }

    /// Disk centers 1..=n as a curve (the base plate duplicates disk 1).
    pub fn disk_curve(&self) -> Result<Curve3D> {
        arc_length_parameterize(self.disk_centers[1..].to_vec())
    }
}

/// Base anchor followed by one tendon hole per disk.
pub fn tendon_hole_positions(
    shape: &Shape,
    config: &ManipulatorConfig,
    act: &ActuationState,
) -> Result<Vec<Vector3<f64>>> {
    let n = shape.n_disks();
    if act.disk_angles().len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: act.disk_angles().len(),
        });
    }
    let r = config.tendon_hole_radius;
    Ok((0..=n)
        .map(|k| {
            let angle = if k == 0 { 0.0 } else { act.angle(k) };
            shape.disk_centers[k] + shape.disk_frames[k] * hole_offset(r, angle)
        })
        .collect())
}

/// Length of the straight-chord tendon path from the base anchor to the last disk.
pub fn tendon_path_length(
    shape: &Shape,
    config: &ManipulatorConfig,
    act: &ActuationState,
) -> Result<f64> {
    Ok(path_length(&tendon_hole_positions(shape, config, act)?))
}
