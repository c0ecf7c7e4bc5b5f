//! Observability and excitation report for one dataset.

use nalgebra::Vector3;
use pmd_core::estimation::{stacked_body_regressor, weight, EstimationBatch, PmdConfig};
use pmd_core::metrics::{
    condition_number_scaled, gravity_dominance, kernel_invariance_check, reduced_rank_diagnostics, MotionStats,
};
use pmd_core::rigid_body::{GravityConvention, Pose};
use pmd_core::signals::dynamism;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub samples: usize,
    /// Condition number of the column-scaled stacked regressor.
    pub condition_number: f64,
    pub zero_columns: Vec<usize>,
    pub mean_ang_vel: f64,
    pub mean_lin_acc: f64,
    pub mean_ang_acc: f64,
    pub mean_dynamism: f64,
    /// Mean full-model weight under the given PMD settings.
    pub mean_weight: f64,
    /// Gravitational over non-gravitational load for this motion and point spread.
    pub gravity_dominance: f64,
    pub reduced_rank: usize,
    pub kernel_dimension: usize,
    pub coplanar: bool,
    /// Kernel directions leave mass and first moment unchanged.
    pub kernel_conserves: bool,
    /// Largest inertia change reachable along the reduced-model kernel.
    pub kernel_inertia_change: f64,
}

/// `masses` may be empty, in which case a uniform distribution is assumed for the kernel check.
pub fn diagnose(
    batch: &EstimationBatch,
    points: &[Vector3<f64>],
    masses: &[f64],
    pmd: &PmdConfig,
    gravity: &GravityConvention,
) -> anyhow::Result<DiagnoseReport> {
    batch.validate()?;
    let n = batch.len() as f64;
    let mean = |f: &dyn Fn(&pmd_core::rigid_body::KinematicSample) -> f64| batch.samples.iter().map(f).sum::<f64>() / n;
    let mean_ang_vel = mean(&|s| s.ang_vel.norm());
    let mean_lin_acc = mean(&|s| s.lin_acc.norm());
    let mean_ang_acc = mean(&|s| s.ang_acc.norm());
    let mean_dynamism = mean(&|s| dynamism(s, &pmd.normalizers));
    let mean_weight = mean(&|s| weight(dynamism(s, &pmd.normalizers), pmd));

    let (a, _) = stacked_body_regressor(batch, gravity)?;
    let cond = condition_number_scaled(&a)?;

    let masses: Vec<f64> = if masses.len() == points.len() && masses.iter().any(|&m| m > 0.0) {
        masses.to_vec()
    } else {
        vec![1.0 / points.len().max(1) as f64; points.len()]
    };
    let total: f64 = masses.iter().sum();
    let com = points.iter().zip(&masses).map(|(p, &m)| p * m).sum::<Vector3<f64>>() / total;
    let radius = points.iter().map(|p| (p - com).norm()).fold(0.0, f64::max);
    let dominance = gravity_dominance(&MotionStats {
        lin_acc: mean_lin_acc,
        ang_vel: mean_ang_vel,
        ang_acc: mean_ang_acc,
        mass: total,
        radius,
        gravity: gravity.g.norm(),
    });

    let poses: Vec<Pose> = batch.samples.iter().map(|s| s.pose()).collect();
    let rank = reduced_rank_diagnostics(points, &poses, gravity)?;
    let kernel = kernel_invariance_check(&rank.kernel, points, &masses)?;
    Ok(DiagnoseReport {
        samples: batch.len(),
        condition_number: cond.kappa,
        zero_columns: cond.zero_columns,
        mean_ang_vel,
        mean_lin_acc,
        mean_ang_acc,
        mean_dynamism,
        mean_weight,
        gravity_dominance: dominance.ratio,
        reduced_rank: rank.rank,
        kernel_dimension: kernel.dimension,
        coplanar: rank.coplanar,
        kernel_conserves: kernel.conserves(1e-9 * total.max(1.0)),
        kernel_inertia_change: kernel.max_inertia_change,
    })
}
