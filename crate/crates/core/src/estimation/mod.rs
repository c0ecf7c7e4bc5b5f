//! Inertial parameter estimators: point mass discretization and least-squares baselines.

mod nnls;
mod ols;
mod pmd;
mod rtls;

pub use nnls::{kkt_residual, nnls_gram, nnls_solve, nnls_solve_with, normal_equations, NnlsOptions, NnlsSolution};
pub use ols::{ols_identify, stacked_body_regressor};
pub use pmd::{aggregate_masses, pmd_identify, weight, PmdConfig, PmdProblem, WorldOrigin};
pub use rtls::{rtls_identify, Rtls, RtlsConfig, RtlsOutput, RtlsStep};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rigid_body::{InertialParams, KinematicSample, Wrench, CONSISTENCY_TOL};
use crate::signals::Measurement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Pmd,
    Ols,
    Rtls,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Pmd, Estimator::Ols, Estimator::Rtls];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Pmd => "pmd",
            Estimator::Ols => "ols",
            Estimator::Rtls => "rtls",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown estimator `{s}`")))
    }
}

/// Synchronized kinematic samples and sensor wrenches consumed by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationBatch {
    pub samples: Vec<KinematicSample>,
    pub wrenches: Vec<Wrench>,
}

impl EstimationBatch {
    pub fn new(samples: Vec<KinematicSample>, wrenches: Vec<Wrench>) -> Result<Self> {
        let batch = Self { samples, wrenches };
        batch.validate()?;
        Ok(batch)
    }

    pub fn from_measurements(measurements: &[Measurement]) -> Result<Self> {
        Self::new(measurements.iter().map(|m| m.sample).collect(), measurements.iter().map(|m| m.wrench).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The first `n` timesteps.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self { samples: self.samples[..n].to_vec(), wrenches: self.wrenches[..n].to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(invalid("estimation batch is empty"));
        }
        if self.samples.len() != self.wrenches.len() {
            return Err(invalid("batch has mismatched sample and wrench counts"));
        }
        for (s, w) in self.samples.iter().zip(&self.wrenches) {
            s.validate()?;
            if !w.is_finite() {
                return Err(invalid("batch contains a non-finite wrench"));
            }
        }
        Ok(())
    }
}

/// Outcome of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub theta: InertialParams,
    /// Point masses (PMD only).
    pub masses: Option<Vec<f64>>,
    pub iterations: usize,
    pub wall_time: f64,
    /// Pseudo-inertia check, recomputed from `theta`.
    pub consistent: bool,
    pub min_eigenvalue: f64,
    /// Per-timestep dynamism weights (PMD only).
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    /// Data residual of the gravity-only model (PMD only).
    pub reduced_residual_norm: Option<f64>,
    /// Data residual of the full model (PMD only).
    pub full_residual_norm: Option<f64>,
    /// Numerical rank of the stacked regressor (OLS only).
    pub rank: Option<usize>,
    pub rank_deficient: bool,
    /// RTLS: the smallest singular value was repeated at some step.
    pub ambiguous: bool,
}

impl EstimateReport {
    pub(crate) fn new(estimator: Estimator, theta: InertialParams) -> Self {
        let min_eigenvalue = theta.min_pseudo_inertia_eigenvalue();
        Self {
            estimator,
            theta,
            masses: None,
            iterations: 0,
            wall_time: 0.0,
            consistent: theta.is_physically_consistent(CONSISTENCY_TOL),
            min_eigenvalue,
            weights: Vec::new(),
            residual_norm: 0.0,
            reduced_residual_norm: None,
            full_residual_norm: None,
            rank: None,
            rank_deficient: false,
            ambiguous: false,
        }
    }
}
