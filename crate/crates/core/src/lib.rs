//! Identification of the ten inertial parameters of a rigid body from force-torque and
//! kinematic measurements, with emphasis on slow, gravity-dominated motions.
//!
//! The point mass discretization estimator ([`estimation::pmd_identify`]) assigns non-negative
//! masses to points sampled inside the object's known shape, blending a gravity-only model with
//! the full Newton–Euler model according to how dynamic each measurement is. Least-squares
//! baselines, a trajectory and sensor simulator, error metrics and observability diagnostics
//! complete the toolkit.

pub mod discretization;
pub mod error;
pub mod estimation;
pub mod metrics;
pub mod rigid_body;
pub mod signals;

pub use error::{Error, Result};
