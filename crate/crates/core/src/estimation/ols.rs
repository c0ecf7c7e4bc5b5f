use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{EstimateReport, EstimationBatch, Estimator};
use crate::error::{invalid, Result};
use crate::rigid_body::{body_regressor, Frame, GravityConvention, InertialParams, ParamVector};

const RANK_TOL: f64 = 1e-9;

/// Stacked body-frame regressor and measured wrenches (converted to body axes when needed).
pub fn stacked_body_regressor(batch: &EstimationBatch, gravity: &GravityConvention) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = batch.len();
    let mut a = DMatrix::zeros(6 * m, 10);
    let mut b = DVector::zeros(6 * m);
    for (k, (s, w)) in batch.samples.iter().zip(&batch.wrenches).enumerate() {
        a.view_mut((6 * k, 0), (6, 10)).copy_from(&body_regressor(s, gravity)?);
        let w = match w.frame {
            Frame::World => w.transformed(&s.pose().inverse(), Frame::Body),
            _ => *w,
        };
        b.rows_mut(6 * k, 6).copy_from(&w.to_vector());
    }
    Ok((a, b))
}

/// Minimum-norm least squares on the stacked Newton–Euler regressor.
pub fn ols_identify(batch: &EstimationBatch, gravity: &GravityConvention) -> Result<EstimateReport> {
    batch.validate()?;
    if batch.len() < 2 {
        return Err(invalid("least squares needs at least two timesteps"));
    }
    let start = Instant::now();
    let (a, b) = stacked_body_regressor(batch, gravity)?;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = RANK_TOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(&b, tol).map_err(|e| invalid(e.to_string()))?;
    let wall_time = start.elapsed().as_secs_f64();

    let theta = InertialParams::from_vector(&ParamVector::from_iterator(x.iter().copied()), Frame::Body);
    let mut report = EstimateReport::new(Estimator::Ols, theta);
    report.residual_norm = (&a * &x - &b).norm();
    report.rank = Some(rank);
    report.rank_deficient = rank < 10;
    report.wall_time = wall_time;
    Ok(report)
}
