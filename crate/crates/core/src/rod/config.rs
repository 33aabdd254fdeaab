use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry, material and mass parameters of the manipulator.
///
/// Disk 1 sits at the clamped base; disks 1..=n_disks are spaced evenly, so
/// the backbone has `n_disks - 1` equal segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManipulatorConfig {
    #[serde(rename = "backbone_length_mm")]
    pub backbone_length: f64,
    pub n_disks: usize,
    #[serde(rename = "tendon_hole_radius_mm")]
    pub tendon_hole_radius: f64,
    #[serde(rename = "backbone_diameter_mm")]
    pub backbone_diameter: f64,
    #[serde(rename = "elastic_modulus_mpa")]
    pub elastic_modulus: f64,
    #[serde(rename = "shear_modulus_mpa")]
    pub shear_modulus: f64,
    /// Servo, disk and bearing per assembly.
    #[serde(rename = "disk_mass_g")]
    pub disk_mass: f64,
    #[serde(rename = "backbone_linear_density_g_per_mm")]
    pub backbone_linear_density: f64,
    #[serde(rename = "tendon_stiffness_n_per_mm")]
    pub tendon_stiffness: f64,
    #[serde(rename = "gravity_m_per_s2")]
    pub gravity: [f64; 3],
    pub elements_per_segment: usize,
}

impl Default for ManipulatorConfig {
    fn default() -> Self {
        ManipulatorConfig {
            backbone_length: 560.0,
            n_disks: 9,
            tendon_hole_radius: 34.0,
            backbone_diameter: 1.5,
            elastic_modulus: 60_000.0,
            shear_modulus: 23_000.0,
            disk_mass: 40.0,
            // Nitinol, 6.45 g/cm^3 over a 1.5 mm round section
            backbone_linear_density: 0.0114,
            tendon_stiffness: 50.0,
            gravity: [0.0, 0.0, -9.81],
            elements_per_segment: 4,
        }
    }
}

impl ManipulatorConfig {
    pub fn n_segments(&self) -> usize {
        self.n_disks - 1
    }

    pub fn n_elements(&self) -> usize {
        self.n_segments() * self.elements_per_segment
    }

    pub fn segment_length(&self) -> f64 {
        self.backbone_length / self.n_segments() as f64
    }

    pub fn element_length(&self) -> f64 {
        self.backbone_length / self.n_elements() as f64
    }

    /// Node index of disk `k` (1-based).
    pub fn disk_node(&self, k: usize) -> usize {
        (k - 1) * self.elements_per_segment
    }

    /// Arc positions (mm) of disks 1..=n_disks.
    pub fn disk_arc_positions(&self) -> Vec<f64> {
        (0..self.n_disks)
            .map(|k| k as f64 * self.segment_length())
            .collect()
    }

    fn second_moment(&self) -> f64 {
        PI * self.backbone_diameter.powi(4) / 64.0
    }

    /// EI in N mm^2.
    pub fn bending_stiffness(&self) -> f64 {
        self.elastic_modulus * self.second_moment()
    }

    /// GJ in N mm^2.
    pub fn torsional_stiffness(&self) -> f64 {
        self.shear_modulus * 2.0 * self.second_moment()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("backbone_length_mm", self.backbone_length),
            ("tendon_hole_radius_mm", self.tendon_hole_radius),
            ("backbone_diameter_mm", self.backbone_diameter),
            ("elastic_modulus_mpa", self.elastic_modulus),
            ("shear_modulus_mpa", self.shear_modulus),
            ("disk_mass_g", self.disk_mass),
            (
                "backbone_linear_density_g_per_mm",
                self.backbone_linear_density,
            ),
            ("tendon_stiffness_n_per_mm", self.tendon_stiffness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.n_disks < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_disks must be >= 2, got {}",
                self.n_disks
            )));
        }
        if self.elements_per_segment < 1 {
            return Err(Error::InvalidConfig(
                "elements_per_segment must be >= 1".into(),
            ));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidConfig(
                "gravity_m_per_s2 must be finite".into(),
            ));
        }
        let (ei, gj) = (self.bending_stiffness(), self.torsional_stiffness());
        if !(ei.is_finite() && ei > 0.0 && gj.is_finite() && gj > 0.0) {
            return Err(Error::InvalidConfig(
                "derived stiffnesses must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}
