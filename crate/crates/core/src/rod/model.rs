//! Discrete inextensible rod: kinematics, energy and its analytic gradient.
//!
//! Each element carries a constant strain (two bending curvatures and a
//! twist rate) in its material frame. The backbone hangs from the base
//! along the frame's -z axis; tendon holes lie in the disk's local x-y plane.

use nalgebra::{Matrix3, Rotation3, Vector3};

use super::actuation::ActuationState;
use super::config::ManipulatorConfig;
use super::shape::Shape;
use crate::error::{Error, Result};
use crate::geometry::arc_length_parameterize;

/// Backbone tangent in the local frame.
pub(crate) const LOCAL_TANGENT: Vector3<f64> = Vector3::new(0.0, 0.0, -1.0);

/// g * (m/s^2) * mm -> mJ
const GRAVITY_SCALE: f64 = 1e-3;

fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn exp_so3(phi: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::new(*phi).into_inner()
}

/// Right Jacobian of SO(3): exp(phi + d) ~ exp(phi) exp(J_r(phi) d).
fn right_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = phi.norm_squared();
    let (a, b) = if t2 < 1e-8 {
        (
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let t = t2.sqrt();
        ((1.0 - t.cos()) / t2, (t - t.sin()) / (t2 * t))
    };
    let k = hat(phi);
    Matrix3::identity() - k * a + k * k * b
}

/// Hole offset in the disk frame for an angle in degrees.
pub(crate) fn hole_offset(radius: f64, angle_deg: f64) -> Vector3<f64> {
    let a = angle_deg.to_radians();
    Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
}

/// Node frames and positions for one strain state.
pub(crate) struct Pose {
    pub frames: Vec<Matrix3<f64>>,
    pub nodes: Vec<Vector3<f64>>,
    /// exp(phi_e / 2) per element.
    half: Vec<Matrix3<f64>>,
}

/// Energy split into its parts (mJ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub elastic: f64,
    pub gravity: f64,
    pub tendon: f64,
    pub path_length: f64,
    pub tension: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.elastic + self.gravity + self.tendon
    }
}

/// Precomputed per-config quantities.
#[derive(Debug, Clone)]
pub struct RodModel {
    config: ManipulatorConfig,
    element_length: f64,
    ei: f64,
    gj: f64,
    node_mass: Vec<f64>,
    gravity: Vector3<f64>,
}

impl RodModel {
    pub fn new(config: &ManipulatorConfig) -> Result<RodModel> {
        config.validate()?;
        let n_el = config.n_elements();
        let l = config.element_length();
        let mut node_mass = vec![0.0; n_el + 1];
        let element_mass = config.backbone_linear_density * l;
        for e in 0..n_el {
            node_mass[e] += 0.5 * element_mass;
            node_mass[e + 1] += 0.5 * element_mass;
        }
        for k in 1..=config.n_disks {
            node_mass[config.disk_node(k)] += config.disk_mass;
        }
        Ok(RodModel {
            config: config.clone(),
            element_length: l,
            ei: config.bending_stiffness(),
            gj: config.torsional_stiffness(),
            node_mass,
            gravity: Vector3::from(config.gravity),
        })
    }

    pub fn config(&self) -> &ManipulatorConfig {
        &self.config
    }

    pub fn n_dof(&self) -> usize {
        3 * self.config.n_elements()
    }

    pub fn element_length(&self) -> f64 {
        self.element_length
    }

    /// Frame propagation from element rotation vectors (rad).
    pub(crate) fn pose(&self, rotations: &[f64]) -> Pose {
        let n_el = self.config.n_elements();
        let l = self.element_length;
        let mut frames = Vec::with_capacity(n_el + 1);
        let mut nodes = Vec::with_capacity(n_el + 1);
        let mut half = Vec::with_capacity(n_el);
        frames.push(Matrix3::identity());
        nodes.push(Vector3::zeros());
        for e in 0..n_el {
            let phi = Vector3::new(rotations[3 * e], rotations[3 * e + 1], rotations[3 * e + 2]);
            let h = exp_so3(&(phi * 0.5));
            let r = frames[e];
            nodes.push(nodes[e] + r * (h * LOCAL_TANGENT) * l);
            frames.push(r * (h * h));
            half.push(h);
        }
        Pose {
            frames,
            nodes,
            half,
        }
    }

    /// Base anchor (angle 0 on the base plate) followed by one hole per disk.
    pub(crate) fn holes(&self, pose: &Pose, act: &ActuationState) -> Vec<Vector3<f64>> {
        let r = self.config.tendon_hole_radius;
        let mut holes = Vec::with_capacity(self.config.n_disks + 1);
        holes.push(hole_offset(r, 0.0));
        for k in 1..=self.config.n_disks {
            let n = self.config.disk_node(k);
            holes.push(pose.nodes[n] + pose.frames[n] * hole_offset(r, act.angle(k)));
        }
        holes
    }

    /// Tendon path through the holes of a straight backbone.
    pub fn slack_length(&self, act: &ActuationState) -> f64 {
        let zeros = vec![0.0; self.n_dof()];
        path_length(&self.holes(&self.pose(&zeros), act))
    }

    pub(crate) fn check_actuation(&self, act: &ActuationState) -> Result<()> {
        if act.disk_angles().len() != self.config.n_disks {
            return Err(Error::DimensionMismatch {
                expected: self.config.n_disks,
                found: act.disk_angles().len(),
            });
        }
        Ok(())
    }

    fn elastic(&self, rotations: &[f64]) -> f64 {
        let l = self.element_length;
        rotations
            .chunks_exact(3)
            .map(|p| 0.5 / l * (self.ei * (p[0] * p[0] + p[1] * p[1]) + self.gj * p[2] * p[2]))
            .sum()
    }

    fn gravity_energy(&self, pose: &Pose) -> f64 {
        -GRAVITY_SCALE
            * pose
                .nodes
                .iter()
                .zip(&self.node_mass)
                .map(|(p, m)| m * self.gravity.dot(p))
                .sum::<f64>()
    }

    pub(crate) fn terms(&self, rotations: &[f64], act: &ActuationState, slack: f64) -> EnergyTerms {
        let pose = self.pose(rotations);
        let path = path_length(&self.holes(&pose, act));
        let stretch = (path - (slack - act.tendon_displacement())).max(0.0);
        EnergyTerms {
            elastic: self.elastic(rotations),
            gravity: self.gravity_energy(&pose),
            tendon: 0.5 * self.config.tendon_stiffness * stretch * stretch,
            path_length: path,
            tension: self.config.tendon_stiffness * stretch,
        }
    }

    /// Energy (mJ) and its gradient with respect to element rotations (mJ/rad).
    pub(crate) fn energy_and_gradient(
        &self,
        rotations: &[f64],
        act: &ActuationState,
        slack: f64,
        grad: &mut [f64],
    ) -> f64 {
        let n_el = self.config.n_elements();
        let l = self.element_length;
        let pose = self.pose(rotations);
        let holes = self.holes(&pose, act);
        let path = path_length(&holes);
        let stretch = (path - (slack - act.tendon_displacement())).max(0.0);
        let tension = self.config.tendon_stiffness * stretch;

        // dE/dp for every point, accumulated per node as force and moment about the origin
        let mut force = vec![Vector3::zeros(); n_el + 1];
        let mut moment = vec![Vector3::zeros(); n_el + 1];
        for (n, p) in pose.nodes.iter().enumerate() {
            let f = -GRAVITY_SCALE * self.node_mass[n] * self.gravity;
            force[n] += f;
            moment[n] += p.cross(&f);
        }
        if tension > 0.0 {
            let units: Vec<Vector3<f64>> = holes
                .windows(2)
                .map(|w| {
                    let d = w[1] - w[0];
                    let len = d.norm();
                    if len > 1e-12 {
                        d / len
                    } else {
                        Vector3::zeros()
                    }
                })
                .collect();
            for k in 1..holes.len() {
                let mut f = units[k - 1];
                if k < units.len() {
                    f -= units[k];
                }
                let f = f * tension;
                let n = self.config.disk_node(k);
                force[n] += f;
                moment[n] += holes[k].cross(&f);
            }
        }
        for n in (0..n_el).rev() {
            let (f, m) = (force[n + 1], moment[n + 1]);
            force[n] += f;
            moment[n] += m;
        }

        for e in 0..n_el {
            let phi = Vector3::new(rotations[3 * e], rotations[3 * e + 1], rotations[3 * e + 2]);
            let sf = force[e + 1];
            let torque = moment[e + 1] - pose.nodes[e + 1].cross(&sf);
            let g_rot =
                right_jacobian(&phi).transpose() * (pose.frames[e + 1].transpose() * torque);
            let local_f = pose.half[e].transpose() * (pose.frames[e].transpose() * sf);
            let g_pos = right_jacobian(&(phi * 0.5)).transpose()
                * LOCAL_TANGENT.cross(&local_f)
                * (0.5 * l);
            let g = g_rot + g_pos;
            grad[3 * e] = g.x + self.ei / l * phi.x;
            grad[3 * e + 1] = g.y + self.ei / l * phi.y;
            grad[3 * e + 2] = g.z + self.gj / l * phi.z;
        }

        self.elastic(rotations)
            + self.gravity_energy(&pose)
            + 0.5 * self.config.tendon_stiffness * stretch * stretch
    }

    pub(crate) fn shape(&self, rotations: &[f64]) -> Shape {
        let pose = self.pose(rotations);
        let n_disks = self.config.n_disks;
        let mut centers = Vec::with_capacity(n_disks + 1);
        let mut frames = Vec::with_capacity(n_disks + 1);
        centers.push(pose.nodes[0]);
        frames.push(pose.frames[0]);
        for k in 1..=n_disks {
            let n = self.config.disk_node(k);
            centers.push(pose.nodes[n]);
            frames.push(pose.frames[n]);
        }
        let dense = arc_length_parameterize(pose.nodes.clone()).expect("rod nodes are distinct");
        Shape::new(centers, frames, dense)
    }
}

pub(crate) fn path_length(holes: &[Vector3<f64>]) -> f64 {
    holes.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> RodModel {
        RodModel::new(&ManipulatorConfig::default()).unwrap()
    }

    fn fd_gradient(m: &RodModel, x: &[f64], act: &ActuationState, slack: f64) -> Vec<f64> {
        let h = 1e-6;
        let mut out = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let ep = m.terms(&xp, act, slack).total();
            xp[i] = x[i] - h;
            let em = m.terms(&xp, act, slack).total();
            xp[i] = x[i];
            out[i] = (ep - em) / (2.0 * h);
        }
        out
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let m = model();
        let act = ActuationState::new(
            60.0,
            vec![0.0, 20.0, -45.0, 90.0, -70.0, 10.0, 0.0, -20.0, 35.0],
        )
        .unwrap();
        let slack = m.slack_length(&act);
        let x: Vec<f64> = (0..m.n_dof())
            .map(|i| 0.05 * ((i as f64) * 1.37).sin())
            .collect();
        let mut g = vec![0.0; x.len()];
        let e = m.energy_and_gradient(&x, &act, slack, &mut g);
        assert!((e - m.terms(&x, &act, slack).total()).abs() < 1e-9 * e.abs().max(1.0));
        assert!(m.terms(&x, &act, slack).tension > 0.0);
        let fd = fd_gradient(&m, &x, &act, slack);
        for (i, (a, b)) in g.iter().zip(&fd).enumerate() {
            assert!(
                (a - b).abs() <= 1e-5 * (1.0 + b.abs()),
                "dof {i}: analytic {a} fd {b}"
            );
        }
    }

    #[test]
    fn frames_stay_orthonormal() {
        let m = model();
        let x: Vec<f64> = (0..m.n_dof())
            .map(|i| 0.3 * ((i as f64) * 0.71).cos())
            .collect();
        let pose = m.pose(&x);
        for f in &pose.frames {
            assert!((f.transpose() * f - Matrix3::identity()).norm() < 1e-12);
            assert!((f.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn right_jacobian_small_angle_series_matches_closed_form() {
        let phi = Vector3::new(0.3e-4, -0.5e-4, 0.7e-4);
        let t = phi.norm();
        let k = hat(&phi);
        let closed = Matrix3::identity() - k * ((1.0 - t.cos()) / (t * t))
            + k * k * ((t - t.sin()) / (t * t * t));
        assert!((right_jacobian(&phi) - closed).norm() < 1e-10);
    }

    #[test]
    fn right_jacobian_first_order() {
        let phi = Vector3::new(0.4, -0.2, 0.9);
        let d = Vector3::new(1e-6, 2e-6, -1e-6);
        let lhs = exp_so3(&(phi + d));
        let rhs = exp_so3(&phi) * exp_so3(&(right_jacobian(&phi) * d));
        assert!((lhs - rhs).norm() < 1e-11);
    }
}
