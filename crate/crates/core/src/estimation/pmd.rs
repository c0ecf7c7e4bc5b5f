//! Point mass discretization: non-negative masses on fixed body points, fitted to a per-timestep
//! blend of the gravity-only and the full Newton–Euler model.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::nnls::{nnls_gram, NnlsOptions};
use super::{EstimateReport, EstimationBatch, Estimator};
use crate::error::{invalid, Error, Result};
use crate::rigid_body::{
    point_full_regressor, point_parameters, reduced_regressor, Frame, GravityConvention, InertialParams, KinematicSample,
    ParamVector, Pose,
};
use crate::signals::{dynamism, DynamismNormalizers};

/// Origin of the world frame in which the regressors are stacked.
///
/// World-frame torques are taken about this point, so keeping it close to the body keeps the
/// torque rows well scaled.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "point")]
pub enum WorldOrigin {
    /// Mean body translation over the batch.
    #[default]
    BatchMean,
    Fixed([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PmdConfig {
    pub c1: f64,
    pub lambda: f64,
    /// Weight sharpness `s` in `tanh(s·D/c1)`.
    pub sharpness: f64,
    pub normalizers: DynamismNormalizers,
    /// Replaces the dynamism schedule by a constant weight.
    pub fixed_weight: Option<f64>,
    pub origin: WorldOrigin,
    pub solver: NnlsOptions,
}

impl Default for PmdConfig {
    fn default() -> Self {
        Self {
            c1: 300.0,
            lambda: 0.1,
            sharpness: 3.0,
            normalizers: DynamismNormalizers::default(),
            fixed_weight: None,
            origin: WorldOrigin::BatchMean,
            solver: NnlsOptions::default(),
        }
    }
}

impl PmdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(invalid(format!("c1 must be positive, got {}", self.c1)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.sharpness.is_finite() && self.sharpness > 0.0) {
            return Err(invalid("weight sharpness must be positive"));
        }
        let n = &self.normalizers;
        if [n.n1, n.n2, n.n3].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("dynamism normalizers must be positive"));
        }
        if let Some(w) = self.fixed_weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(invalid("fixed weight must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// `tanh(s·D/c1)`
pub fn weight(d: f64, config: &PmdConfig) -> f64 {
    (config.sharpness * d / config.c1).tanh()
}

/// Stacked PMD least-squares problem for one batch and point set.
#[derive(Debug, Clone)]
pub struct PmdProblem {
    pub points: Vec<Vector3<f64>>,
    /// Reduced-model rows, 6 per timestep.
    pub reduced: DMatrix<f64>,
    /// Full-model rows, 6 per timestep.
    pub full: DMatrix<f64>,
    /// Measured world-frame wrenches, 6 per timestep.
    pub target: DVector<f64>,
    /// One weight per timestep.
    pub weights: Vec<f64>,
    pub origin: Vector3<f64>,
    pub lambda: f64,
}

impl PmdProblem {
    pub fn new(
        batch: &EstimationBatch,
        points: &[Vector3<f64>],
        config: &PmdConfig,
        gravity: &GravityConvention,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        config.validate()?;
        batch.validate()?;
        let origin = match config.origin {
            WorldOrigin::BatchMean => {
                batch.samples.iter().map(|s| s.translation).sum::<Vector3<f64>>() / batch.len() as f64
            }
            WorldOrigin::Fixed(p) => Vector3::from(p),
        };
        let (m, n) = (batch.len(), points.len());
        let mut reduced = DMatrix::zeros(6 * m, n);
        let mut full = DMatrix::zeros(6 * m, n);
        let mut target = DVector::zeros(6 * m);
        let mut weights = Vec::with_capacity(m);
        for (k, (sample, wrench)) in batch.samples.iter().zip(&batch.wrenches).enumerate() {
            let shifted = KinematicSample { translation: sample.translation - origin, ..*sample };
            let pose = shifted.pose();
            let measured = match wrench.frame {
                Frame::World => {
                    let back = Pose::new(nalgebra::Matrix3::identity(), -origin);
                    wrench.transformed(&back, Frame::World)
                }
                _ => wrench.transformed(&pose, Frame::World),
            };
            reduced.view_mut((6 * k, 0), (6, n)).copy_from(&reduced_regressor(points, &pose, gravity)?);
            full.view_mut((6 * k, 0), (6, n)).copy_from(&point_full_regressor(points, &shifted, gravity)?);
            target.rows_mut(6 * k, 6).copy_from(&measured.to_vector());
            weights.push(match config.fixed_weight {
                Some(w) => w,
                None => weight(dynamism(sample, &config.normalizers), config),
            });
        }
        Ok(Self { points: points.to_vec(), reduced, full, target, weights, origin, lambda: config.lambda })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weighted design matrix and target. Full-model rows are left out at timesteps with zero
    /// weight, where they contribute nothing.
    pub fn design(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.points.len();
        let active = self.weights.iter().filter(|&&w| w > 0.0).count();
        let rows = 6 * (self.len() + active);
        let mut d = DMatrix::zeros(rows, n);
        let mut t = DVector::zeros(rows);
        let mut r = 0;
        for (k, &w) in self.weights.iter().enumerate() {
            d.view_mut((r, 0), (6, n)).copy_from(&(self.reduced.view((6 * k, 0), (6, n)) * (1.0 - w)));
            t.rows_mut(r, 6).copy_from(&(self.target.rows(6 * k, 6) * (1.0 - w)));
            r += 6;
            if w > 0.0 {
                d.view_mut((r, 0), (6, n)).copy_from(&(self.full.view((6 * k, 0), (6, n)) * w));
                t.rows_mut(r, 6).copy_from(&(self.target.rows(6 * k, 6) * w));
                r += 6;
            }
        }
        (d, t)
    }

    /// `‖diag(1−w)(A_r·m − b)‖² + ‖diag(w)(A_f·m − b)‖²`
    pub fn data_term(&self, masses: &DVector<f64>) -> f64 {
        let (d, t) = self.design();
        (d * masses - t).norm_squared()
    }

    pub fn objective(&self, masses: &DVector<f64>) -> f64 {
        self.data_term(masses) + self.lambda * masses.norm_squared()
    }

    /// `(‖A_r·m − b‖, ‖A_f·m − b‖)`
    pub fn residual_norms(&self, masses: &DVector<f64>) -> (f64, f64) {
        ((&self.reduced * masses - &self.target).norm(), (&self.full * masses - &self.target).norm())
    }

    /// Normal equations `(DᵀD + λI, Dᵀt)` of the weighted problem.
    pub fn normal_equations(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (d, t) = self.design();
        let mut h = d.tr_mul(&d);
        for i in 0..h.nrows() {
            h[(i, i)] += self.lambda;
        }
        (h, d.tr_mul(&t))
    }

    pub fn solve(&self, options: &NnlsOptions, initial_free: Option<&[bool]>) -> Result<(DVector<f64>, usize)> {
        let (h, g) = self.normal_equations();
        let sol = nnls_gram(&h, &g, initial_free, options)?;
        Ok((sol.x, sol.iterations))
    }
}

/// Parameters of point masses; unlike [`crate::discretization::aggregate`] this accepts an
/// all-zero mass vector.
pub fn aggregate_masses(points: &[Vector3<f64>], masses: &DVector<f64>) -> InertialParams {
    let theta = points
        .iter()
        .zip(masses.iter())
        .fold(ParamVector::zeros(), |acc, (p, &m)| acc + point_parameters(p) * m);
    InertialParams::from_vector(&theta, Frame::Body)
}

pub fn pmd_identify(
    batch: &EstimationBatch,
    points: &[Vector3<f64>],
    config: &PmdConfig,
    gravity: &GravityConvention,
) -> Result<EstimateReport> {
    let start = Instant::now();
    let problem = PmdProblem::new(batch, points, config, gravity)?;
    let (masses, iterations) = problem.solve(&config.solver, None)?;
    let wall_time = start.elapsed().as_secs_f64();

    let theta = aggregate_masses(points, &masses);
    let (reduced_norm, full_norm) = problem.residual_norms(&masses);
    let mut report = EstimateReport::new(Estimator::Pmd, theta);
    report.residual_norm = problem.data_term(&masses).sqrt();
    report.reduced_residual_norm = Some(reduced_norm);
    report.full_residual_norm = Some(full_norm);
    report.masses = Some(masses.iter().copied().collect());
    report.iterations = iterations;
    report.wall_time = wall_time;
    report.weights = problem.weights;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{aggregate, PointMassModel};
    use crate::rigid_body::{body_wrench, Wrench};

    fn single_point_batch(mass: f64, p: Vector3<f64>) -> EstimationBatch {
        let g = GravityConvention::default();
        let params = aggregate(&PointMassModel::new(vec![p], vec![mass]).unwrap()).unwrap();
        let samples: Vec<KinematicSample> = (0..10)
            .map(|k| {
                let r = nalgebra::Rotation3::from_euler_angles(0.1 * k as f64, -0.2 * k as f64, 0.05 * k as f64);
                KinematicSample::at_rest(k as f64 * 0.01, &Pose::new(*r.matrix(), Vector3::new(0.3, 0.0, 0.2)))
            })
            .collect();
        let wrenches: Vec<Wrench> = samples.iter().map(|s| body_wrench(&params, s, &g).unwrap()).collect();
        EstimationBatch::new(samples, wrenches).unwrap()
    }

    #[test]
    fn weight_schedule() {
        let c = PmdConfig::default();
        assert_eq!(weight(0.0, &c), 0.0);
        assert!((weight(300.0, &c) - 3f64.tanh()).abs() < 1e-12);
        assert!((weight(100.0, &c) - 0.761_594_155_955_764_9).abs() < 1e-12);
        assert!(weight(1e6, &c) <= 1.0);
    }

    #[test]
    fn single_point_mass_is_recovered() {
        let p = Vector3::new(0.02, -0.01, 0.03);
        let batch = single_point_batch(0.7, p);
        let cfg = PmdConfig { lambda: 1e-12, ..Default::default() };
        let rep = pmd_identify(&batch, &[p], &cfg, &GravityConvention::default()).unwrap();
        assert!((rep.theta.mass - 0.7).abs() < 1e-6);
        assert!(rep.consistent);
        assert!(rep.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn world_frame_wrenches_are_accepted() {
        let p = Vector3::new(0.02, -0.01, 0.03);
        let g = GravityConvention::default();
        let mut batch = single_point_batch(0.7, p);
        let body = pmd_identify(&batch, &[p], &PmdConfig::default(), &g).unwrap();
        for (s, w) in batch.samples.iter().zip(batch.wrenches.iter_mut()) {
            *w = w.transformed(&s.pose(), Frame::World);
        }
        let world = pmd_identify(&batch, &[p], &PmdConfig::default(), &g).unwrap();
        assert!((body.theta.mass - world.theta.mass).abs() < 1e-10);
    }

    #[test]
    fn rejects_empty_points_and_bad_config() {
        let batch = single_point_batch(0.7, Vector3::zeros());
        let g = GravityConvention::default();
        assert!(matches!(pmd_identify(&batch, &[], &PmdConfig::default(), &g), Err(Error::EmptyPointSet)));
        let bad = PmdConfig { c1: 0.0, ..Default::default() };
        assert!(pmd_identify(&batch, &[Vector3::zeros()], &bad, &g).is_err());
    }

    #[test]
    fn zero_wrench_gives_zero_body() {
        let mut batch = single_point_batch(0.7, Vector3::zeros());
        for w in &mut batch.wrenches {
            *w = Wrench::new(Vector3::zeros(), Vector3::zeros(), Frame::Body);
        }
        let rep = pmd_identify(&batch, &[Vector3::zeros(), Vector3::x()], &PmdConfig::default(), &GravityConvention::default())
            .unwrap();
        assert_eq!(rep.theta.mass, 0.0);
        assert!(rep.consistent);
    }
}
