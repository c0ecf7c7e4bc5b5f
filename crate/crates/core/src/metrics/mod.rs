//! Scale-invariant error metrics, regressor conditioning and observability diagnostics.

mod observability;

pub use observability::{kernel_invariance_check, reduced_rank_diagnostics, KernelReport, RankDiagnostics, RANK_TOL};

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rigid_body::InertialParams;

/// Bounding-box side lengths of the true object, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectExtent {
    pub a: [f64; 3],
}

impl ObjectExtent {
    pub fn new(a: [f64; 3]) -> Result<Self> {
        let e = Self { a };
        e.validate()?;
        Ok(e)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self> {
        Self::new([v.x, v.y, v.z])
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(format!("object extent must be positive, got {:?}", self.a)));
        }
        Ok(())
    }
}

/// Errors in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mass: f64,
    pub com: [f64; 3],
    pub com_avg: f64,
    /// `[Jxx, Jxy, Jxz, Jyy, Jyz, Jzz]`
    pub inertia: [f64; 6],
    pub inertia_avg: f64,
}

const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Mass error relative to the true mass, COM error relative to the box side along each axis and
/// inertia error relative to the inertia scale of a uniform box of the true mass.
///
/// Both parameter sets must be expressed in the same frame; the inertia is compared about the
/// frame origin.
pub fn error_metrics(estimate: &InertialParams, truth: &InertialParams, extent: &ObjectExtent) -> Result<ErrorReport> {
    extent.validate()?;
    if !(truth.mass.is_finite() && truth.mass > 0.0) {
        return Err(invalid("true mass must be positive"));
    }
    let m = truth.mass;
    let a = extent.a;
    let mass = ((estimate.mass - m) / m).abs() * 100.0;

    let c_hat = if estimate.mass != 0.0 { estimate.com() } else { Vector3::zeros() };
    let dc = c_hat - truth.com();
    let com = [0, 1, 2].map(|i| (dc[i] / a[i]).abs() * 100.0);

    let sum_sq: f64 = a.iter().map(|v| v * v).sum();
    let mut inertia = [0.0; 6];
    for (k, &(i, j)) in UPPER.iter().enumerate() {
        let delta = if i == j { 1.0 } else { 0.0 };
        let scale = m / 12.0 * (delta * sum_sq - a[i] * a[j]);
        inertia[k] = ((estimate.inertia[k] - truth.inertia[k]) * 100.0 / scale).abs();
    }
    Ok(ErrorReport {
        mass,
        com,
        com_avg: com.iter().sum::<f64>() / 3.0,
        inertia,
        inertia_avg: inertia.iter().sum::<f64>() / 6.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `σmax/σmin` of the column-normalized matrix; infinite when it is numerically singular.
    pub kappa: f64,
    /// Columns of zero norm, left out of the computation.
    pub zero_columns: Vec<usize>,
}

/// Condition number after dividing each column by its Euclidean norm.
pub fn condition_number_scaled(a: &DMatrix<f64>) -> Result<ConditionReport> {
    if a.nrows() < a.ncols() || a.ncols() == 0 {
        return Err(invalid(format!("need at least as many rows as columns, got {}×{}", a.nrows(), a.ncols())));
    }
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let zero_columns: Vec<usize> = (0..a.ncols()).filter(|&j| norms[j] == 0.0).collect();
    let kept: Vec<usize> = (0..a.ncols()).filter(|&j| norms[j] > 0.0).collect();
    if kept.is_empty() {
        return Ok(ConditionReport { kappa: f64::INFINITY, zero_columns });
    }
    let scaled = DMatrix::from_fn(a.nrows(), kept.len(), |r, c| a[(r, kept[c])] / norms[kept[c]]);
    let s = scaled.singular_values();
    let (smax, smin) = (s.max(), s.min());
    let singular = smin <= f64::EPSILON * scaled.nrows().max(scaled.ncols()) as f64 * smax;
    Ok(ConditionReport { kappa: if singular { f64::INFINITY } else { smax / smin }, zero_columns })
}

/// Mean motion and object statistics of everyday manipulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionStats {
    pub lin_acc: f64,
    pub ang_vel: f64,
    pub ang_acc: f64,
    pub mass: f64,
    /// Distance from the COM to the edge of the object.
    pub radius: f64,
    pub gravity: f64,
}

impl Default for MotionStats {
    fn default() -> Self {
        Self { lin_acc: 1.45, ang_vel: 1.08, ang_acc: 11.34, mass: 0.257, radius: 0.081, gravity: 9.81 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    /// `m·g / m·(a + ω²r)`
    pub force_ratio: f64,
    /// `m·g·r / (m·r·a + m·r²·α)`
    pub torque_ratio: f64,
    /// Mean of the force and torque ratios.
    pub ratio: f64,
    /// Set when there is no non-gravitational load at all.
    pub gravity_only: bool,
}

/// Ratio of gravitational to non-gravitational force and torque magnitudes for a body of mass
/// `m` whose mass sits at distance `r` from its centre, moving with the given mean rates.
pub fn gravity_dominance(stats: &MotionStats) -> Dominance {
    let MotionStats { lin_acc: a, ang_vel: w, ang_acc: alpha, mass: m, radius: r, gravity: g } = *stats;
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    let force_ratio = ratio(m * g, m * (a + w * w * r));
    let torque_ratio = ratio(m * g * r, m * r * a + m * r * r * alpha);
    Dominance {
        force_ratio,
        torque_ratio,
        ratio: 0.5 * (force_ratio + torque_ratio),
        gravity_only: a == 0.0 && w == 0.0 && alpha == 0.0,
    }
}
