//! Simulation and shape matching for a reconfigurable tendon-driven
//! continuum manipulator: a single tendon routed through rotatable spacer
//! disks on an elastic backbone.
//!
//! * [`geometry`]: arc length, curvature/torsion profiles, smoothing and
//!   torsion sign-change detection.
//! * [`measurement`]: DBSCAN centroiding of repeated point measurements.
//! * [`rod`]: quasi-static rod model (the forward map from actuation to shape).
//! * [`optimize`]: golden-section search and shape/curvature error metrics.
//! * [`sequencer`]: the four-step sequential actuation framework.
//! * [`io`], [`cli`]: file formats and the command-line front end.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measurement;
pub mod optimize;
pub mod rod;
pub mod sequencer;
pub mod svg;

pub use error::{Error, Result};
