use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_TENDON_MM: f64 = 140.0;
pub const MAX_DISK_ANGLE_DEG: f64 = 90.0;

/// Tendon displacement plus one rotation per disk.
///
/// Positive angles turn a disk counterclockwise when viewed from the base
/// toward the tip; seen from the tip (from below the suspended
/// manipulator) the same rotation is clockwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActuationState {
    #[serde(rename = "tendon_mm")]
    tendon_displacement: f64,
    #[serde(rename = "disk_angles_deg")]
    disk_angles: Vec<f64>,
}

#[derive(Deserialize)]
struct RawActuation {
    tendon_mm: f64,
    disk_angles_deg: Vec<f64>,
}

impl<'de> Deserialize<'de> for ActuationState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawActuation::deserialize(d)?;
        ActuationState::new(raw.tendon_mm, raw.disk_angles_deg).map_err(serde::de::Error::custom)
    }
}

impl ActuationState {
    pub fn new(tendon_displacement: f64, disk_angles: Vec<f64>) -> Result<Self> {
        if !(tendon_displacement.is_finite()
            && (0.0..=MAX_TENDON_MM).contains(&tendon_displacement))
        {
            return Err(Error::OutOfBounds(format!(
                "tendon displacement {tendon_displacement} mm outside [0, {MAX_TENDON_MM}] mm"
            )));
        }
        for (i, a) in disk_angles.iter().enumerate() {
            if !(a.is_finite() && a.abs() <= MAX_DISK_ANGLE_DEG) {
                return Err(Error::OutOfBounds(format!(
                    "disk {} angle {a} deg outside +-{MAX_DISK_ANGLE_DEG} deg",
                    i + 1
                )));
            }
        }
        Ok(ActuationState {
            tendon_displacement,
            disk_angles,
        })
    }

    /// All disks at zero.
    pub fn tendon_only(tendon_displacement: f64, n_disks: usize) -> Result<Self> {
        Self::new(tendon_displacement, vec![0.0; n_disks])
    }

    pub fn tendon_displacement(&self) -> f64 {
        self.tendon_displacement
    }

    pub fn disk_angles(&self) -> &[f64] {
        &self.disk_angles
    }

    /// Angle of disk `k` (1-based) in degrees.
    pub fn angle(&self, k: usize) -> f64 {
        self.disk_angles[k - 1]
    }

    pub fn with_tendon(&self, tendon_displacement: f64) -> Result<Self> {
        Self::new(tendon_displacement, self.disk_angles.clone())
    }

    /// Copy with disk `k` (1-based) set to `deg`.
    pub fn with_angle(&self, k: usize, deg: f64) -> Result<Self> {
        if k == 0 || k > self.disk_angles.len() {
            return Err(Error::InvalidParams(format!("disk index {k} out of range")));
        }
        let mut angles = self.disk_angles.clone();
        angles[k - 1] = deg;
        Self::new(self.tendon_displacement, angles)
    }

    pub fn mirrored(&self) -> Self {
        ActuationState {
            tendon_displacement: self.tendon_displacement,
            disk_angles: self.disk_angles.iter().map(|a| -a).collect(),
        }
    }
}
