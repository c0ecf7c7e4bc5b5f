//! Recursive total least squares on the augmented system `[A | b]`.
//!
//! The moment matrix `Σ λ^(k−j) [A|b]ᵀ[A|b]` is kept in square-root form: an upper-triangular
//! `R` with `RᵀR` equal to it, updated by a QR factorization per block. The estimate is the
//! right singular vector of `R` for its smallest singular value, scaled so that its last entry
//! is −1.

use std::time::Instant;

use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::ols::stacked_body_regressor;
use super::{EstimateReport, EstimationBatch, Estimator};
use crate::error::{invalid, Error, Result};
use crate::rigid_body::{body_regressor, Frame, GravityConvention, InertialParams, KinematicSample, ParamVector, Wrench};

type Augmented = SMatrix<f64, 11, 11>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RtlsConfig {
    pub forgetting: f64,
    /// Row blocks accumulated before the first estimate.
    pub min_blocks: usize,
    /// Relative gap under which the two smallest singular values count as equal.
    pub ambiguity_tol: f64,
}

impl Default for RtlsConfig {
    fn default() -> Self {
        Self { forgetting: 0.999, min_blocks: 11, ambiguity_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtlsStep {
    pub t: f64,
    pub estimate: Option<InertialParams>,
    pub smallest_singular_value: f64,
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct Rtls {
    config: RtlsConfig,
    gravity: GravityConvention,
    root: Augmented,
    blocks: usize,
    estimate: Option<InertialParams>,
    ambiguous_seen: bool,
}

impl Rtls {
    pub fn new(config: RtlsConfig, gravity: GravityConvention) -> Result<Self> {
        if !(config.forgetting > 0.0 && config.forgetting <= 1.0) {
            return Err(invalid("forgetting factor must lie in (0, 1]"));
        }
        Ok(Self { config, gravity, root: Augmented::zeros(), blocks: 0, estimate: None, ambiguous_seen: false })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn estimate(&self) -> Option<InertialParams> {
        self.estimate
    }

    /// `RᵀR`, the forgetting-weighted moment matrix of `[A|b]`.
    pub fn moment_matrix(&self) -> Augmented {
        self.root.transpose() * self.root
    }

    pub fn push(&mut self, sample: &KinematicSample, wrench: &Wrench) -> Result<RtlsStep> {
        let a = body_regressor(sample, &self.gravity)?;
        let w = match wrench.frame {
            Frame::World => wrench.transformed(&sample.pose().inverse(), Frame::Body),
            _ => *wrench,
        };
        if !w.is_finite() {
            return Err(invalid("non-finite wrench"));
        }
        let b = w.to_vector();
        let mut stacked = DMatrix::zeros(17, 11);
        stacked.view_mut((0, 0), (11, 11)).copy_from(&(self.root * self.config.forgetting.sqrt()));
        stacked.view_mut((11, 0), (6, 10)).copy_from(&a);
        stacked.view_mut((11, 10), (6, 1)).copy_from(&b);
        let r = stacked.qr().r();
        self.root = Augmented::from_fn(|i, j| r[(i, j)]);
        self.blocks += 1;

        let mut step = RtlsStep { t: sample.t, estimate: None, smallest_singular_value: f64::NAN, ambiguous: false };
        if self.blocks < self.config.min_blocks {
            return Ok(step);
        }
        let svd = self.root.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..11).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let (s0, s1) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
        let smax = svd.singular_values.max();
        step.smallest_singular_value = s0;
        let v: SVector<f64, 11> = v_t.row(order[0]).transpose();
        let degenerate = v[10].abs() <= f64::EPSILON * v.norm();
        if s1 - s0 <= self.config.ambiguity_tol * smax || degenerate {
            step.ambiguous = true;
            self.ambiguous_seen = true;
        } else {
            let theta = ParamVector::from_fn(|i, _| -v[i] / v[10]);
            self.estimate = Some(InertialParams::from_vector(&theta, Frame::Body));
        }
        step.estimate = self.estimate;
        Ok(step)
    }
}

#[derive(Debug, Clone)]
pub struct RtlsOutput {
    pub steps: Vec<RtlsStep>,
    pub report: EstimateReport,
}

pub fn rtls_identify(batch: &EstimationBatch, config: &RtlsConfig, gravity: &GravityConvention) -> Result<RtlsOutput> {
    batch.validate()?;
    let start = Instant::now();
    let mut rtls = Rtls::new(*config, *gravity)?;
    let steps = batch
        .samples
        .iter()
        .zip(&batch.wrenches)
        .map(|(s, w)| rtls.push(s, w))
        .collect::<Result<Vec<_>>>()?;
    let wall_time = start.elapsed().as_secs_f64();
    let theta = rtls
        .estimate()
        .ok_or_else(|| Error::NoEstimate(format!("{} blocks, {} required", rtls.blocks(), config.min_blocks)))?;

    let (a, b) = stacked_body_regressor(batch, gravity)?;
    let mut report = EstimateReport::new(Estimator::Rtls, theta);
    report.residual_norm = (a * nalgebra::DVector::from_iterator(10, theta.to_vector().iter().copied()) - b).norm();
    report.iterations = steps.len();
    report.wall_time = wall_time;
    report.ambiguous = rtls.ambiguous_seen;
    Ok(RtlsOutput { steps, report })
}
