//! Wrench prediction: forward dynamics under an estimate compared with the true body.

use pmd_core::rigid_body::{body_wrench, GravityConvention, InertialParams, KinematicSample, Wrench};

#[derive(Debug, Clone)]
pub struct WrenchPrediction {
    pub t: Vec<f64>,
    /// Body-frame wrench under the estimate.
    pub predicted: Vec<Wrench>,
    /// Body-frame wrench under the reference parameters.
    pub reference: Vec<Wrench>,
    /// Per-axis RMSE, `[fx fy fz τx τy τz]`.
    pub rmse: [f64; 6],
    /// Per-axis RMS of the reference series.
    pub reference_rms: [f64; 6],
}

impl WrenchPrediction {
    /// `sqrt(mean ‖τ̂−τ‖²) / sqrt(mean ‖τ‖²)`.
    pub fn torque_relative_rmse(&self) -> f64 {
        ratio(&self.rmse[3..], &self.reference_rms[3..])
    }

    pub fn force_relative_rmse(&self) -> f64 {
        ratio(&self.rmse[..3], &self.reference_rms[..3])
    }
}

fn ratio(err: &[f64], rms: &[f64]) -> f64 {
    let e: f64 = err.iter().map(|x| x * x).sum();
    let r: f64 = rms.iter().map(|x| x * x).sum();
    (e / r).sqrt()
}

/// Evaluates the Newton-Euler wrench of `estimate` and `reference` along `samples`.
pub fn predict_wrench(
    estimate: &InertialParams,
    reference: &InertialParams,
    samples: &[KinematicSample],
    gravity: &GravityConvention,
) -> pmd_core::Result<WrenchPrediction> {
    let predicted = samples.iter().map(|s| body_wrench(estimate, s, gravity)).collect::<pmd_core::Result<Vec<_>>>()?;
    let truth = samples.iter().map(|s| body_wrench(reference, s, gravity)).collect::<pmd_core::Result<Vec<_>>>()?;
    let n = samples.len().max(1) as f64;
    let mut rmse = [0.0; 6];
    let mut reference_rms = [0.0; 6];
    for (p, r) in predicted.iter().zip(&truth) {
        let (p, r) = (p.to_vector(), r.to_vector());
        for i in 0..6 {
            rmse[i] += (p[i] - r[i]).powi(2);
            reference_rms[i] += r[i] * r[i];
        }
    }
    for i in 0..6 {
        rmse[i] = (rmse[i] / n).sqrt();
        reference_rms[i] = (reference_rms[i] / n).sqrt();
    }
    Ok(WrenchPrediction { t: samples.iter().map(|s| s.t).collect(), predicted, reference: truth, rmse, reference_rms })
}

/// Long-format series: `t, axis, predicted, reference`.
pub fn prediction_csv(p: &WrenchPrediction) -> anyhow::Result<String> {
    const AXES: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "axis", "predicted", "reference"])?;
    for ((t, a), b) in p.t.iter().zip(&p.predicted).zip(&p.reference) {
        let (a, b) = (a.to_vector(), b.to_vector());
        for (i, axis) in AXES.iter().enumerate() {
            w.write_record([t.to_string(), axis.to_string(), a[i].to_string(), b[i].to_string()])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
