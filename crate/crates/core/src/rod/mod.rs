//! Quasi-static forward model of the manipulator.
//!
//! The backbone is an inextensible discrete Kirchhoff rod clamped at the
//! base and hanging under gravity. Disk assemblies are lumped masses at the
//! disk nodes and the tendon is a stiff unilateral spring threaded through
//! one hole per disk. Equilibrium is the minimum of elastic + gravitational
//! + tendon energy over the element strains.

mod actuation;
mod config;
mod model;
mod shape;
mod solver;

use std::sync::Mutex;

use serde::Serialize;

pub use actuation::{ActuationState, MAX_DISK_ANGLE_DEG, MAX_TENDON_MM};
pub use config::ManipulatorConfig;
pub use model::{EnergyTerms, RodModel};
pub use shape::{tendon_hole_positions, tendon_path_length, Shape};

use crate::error::{Error, Result};
use solver::{minimize, SolverSettings};

/// Gradient tolerance (mJ/rad) for a converged equilibrium.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const MAX_ITERATIONS: usize = 5000;

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub shape: Shape,
    /// Element strains (1/mm): two bending curvatures and twist per element.
    pub dof: Vec<f64>,
    pub energy: f64,
    pub gradient_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tendon_path_length: f64,
    pub tendon_tension: f64,
}

/// JSON view of an [`EquilibriumReport`] (the shape itself goes to CSV).
#[derive(Debug, Serialize)]
pub struct ReportSummary {
    pub energy_mj: f64,
    pub gradient_inf_norm_mj_per_rad: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tendon_path_length_mm: f64,
    pub tendon_tension_n: f64,
    pub tip_mm: [f64; 3],
}

impl EquilibriumReport {
    pub fn summary(&self) -> ReportSummary {
        let tip = self.shape.tip();
        ReportSummary {
            energy_mj: self.energy,
            gradient_inf_norm_mj_per_rad: self.gradient_inf_norm,
            iterations: self.iterations,
            converged: self.converged,
            tendon_path_length_mm: self.tendon_path_length,
            tendon_tension_n: self.tendon_tension,
            tip_mm: [tip.x, tip.y, tip.z],
        }
    }
}

fn check_dof(model: &RodModel, dof: &[f64]) -> Result<()> {
    if dof.len() != model.n_dof() {
        return Err(Error::DimensionMismatch {
            expected: model.n_dof(),
            found: dof.len(),
        });
    }
    Ok(())
}

fn strains_to_rotations(model: &RodModel, dof: &[f64]) -> Vec<f64> {
    let l = model.element_length();
    dof.iter().map(|u| u * l).collect()
}

/// Energy breakdown for element strains `dof` (1/mm).
pub fn energy_terms(
    dof: &[f64],
    config: &ManipulatorConfig,
    act: &ActuationState,
) -> Result<EnergyTerms> {
    let model = RodModel::new(config)?;
    model.check_actuation(act)?;
    check_dof(&model, dof)?;
    let slack = model.slack_length(act);
    Ok(model.terms(&strains_to_rotations(&model, dof), act, slack))
}

/// Total potential energy (mJ) for element strains `dof` (1/mm).
pub fn total_energy(dof: &[f64], config: &ManipulatorConfig, act: &ActuationState) -> Result<f64> {
    Ok(energy_terms(dof, config, act)?.total())
}

/// Energy gradient with respect to element rotation angles (mJ/rad), i.e.
/// with respect to strain divided by the element length.
pub fn energy_gradient(
    dof: &[f64],
    config: &ManipulatorConfig,
    act: &ActuationState,
) -> Result<Vec<f64>> {
    let model = RodModel::new(config)?;
    model.check_actuation(act)?;
    check_dof(&model, dof)?;
    let slack = model.slack_length(act);
    let mut g = vec![0.0; dof.len()];
    model.energy_and_gradient(&strains_to_rotations(&model, dof), act, slack, &mut g);
    Ok(g)
}

/// Shape for given element strains.
pub fn shape_from_dof(dof: &[f64], config: &ManipulatorConfig) -> Result<Shape> {
    let model = RodModel::new(config)?;
    check_dof(&model, dof)?;
    Ok(model.shape(&strains_to_rotations(&model, dof)))
}

fn solve_with_model(
    model: &RodModel,
    act: &ActuationState,
    warm_start: Option<&[f64]>,
) -> Result<EquilibriumReport> {
    model.check_actuation(act)?;
    let l = model.element_length();
    let x0 = match warm_start {
        Some(w) => {
            check_dof(model, w)?;
            strains_to_rotations(model, w)
        }
        None => vec![0.0; model.n_dof()],
    };
    let slack = model.slack_length(act);
    let mut probe = vec![0.0; x0.len()];
    if !model
        .energy_and_gradient(&x0, act, slack, &mut probe)
        .is_finite()
    {
        return Err(Error::NonFiniteEnergy);
    }
    let settings = SolverSettings {
        grad_tol: GRADIENT_TOLERANCE,
        max_iterations: MAX_ITERATIONS,
        ..Default::default()
    };
    let min = minimize(
        |x, g| model.energy_and_gradient(x, act, slack, g),
        x0,
        &settings,
    );
    if !min.f.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    let terms = model.terms(&min.x, act, slack);
    Ok(EquilibriumReport {
        shape: model.shape(&min.x),
        dof: min.x.iter().map(|p| p / l).collect(),
        energy: min.f,
        gradient_inf_norm: min.grad_inf,
        iterations: min.iterations,
        converged: min.converged,
        tendon_path_length: terms.path_length,
        tendon_tension: terms.tension,
    })
}

/// Minimizes the total energy, optionally from a previous solution.
pub fn solve_equilibrium(
    config: &ManipulatorConfig,
    act: &ActuationState,
    warm_start: Option<&[f64]>,
) -> Result<EquilibriumReport> {
    solve_with_model(&RodModel::new(config)?, act, warm_start)
}

/// Forward map with continuation: each solve starts from the previous
/// call's equilibrium, so parameter sweeps follow one branch.
#[derive(Debug)]
pub struct Simulator {
    model: RodModel,
    last: Mutex<Option<Vec<f64>>>,
}

impl Clone for Simulator {
    fn clone(&self) -> Self {
        Simulator {
            model: self.model.clone(),
            last: Mutex::new(self.last.lock().expect("warm-start cache poisoned").clone()),
        }
    }
}

impl Simulator {
    pub fn new(config: &ManipulatorConfig) -> Result<Simulator> {
        Ok(Simulator {
            model: RodModel::new(config)?,
            last: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &ManipulatorConfig {
        self.model.config()
    }

    /// Drops the warm start; the next solve starts from the straight rod.
    pub fn reset(&self) {
        *self.last.lock().expect("warm-start cache poisoned") = None;
    }

    pub fn solve(&self, act: &ActuationState) -> Result<EquilibriumReport> {
        let mut last = self.last.lock().expect("warm-start cache poisoned");
        let report = solve_with_model(&self.model, act, last.as_deref())?;
        if report.converged {
            *last = Some(report.dof.clone());
        }
        Ok(report)
    }

    pub fn forward(&self, act: &ActuationState) -> Result<Shape> {
        let report = self.solve(act)?;
        if !report.converged {
            return Err(Error::SolverNotConverged {
                iterations: report.iterations,
                gradient: report.gradient_inf_norm,
            });
        }
        Ok(report.shape)
    }
}
