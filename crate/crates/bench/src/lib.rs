//! Simulation harness: trials, sweeps, dataset files and wrench prediction.

pub mod diagnose;
pub mod io;
pub mod predict;
pub mod sweep;
pub mod trial;

pub use sweep::{run_sweep, SweepResult, SweepSpec};
pub use trial::{run_trial, FilterMode, Motion, TrialResult, TrialRow, TrialSpec};
