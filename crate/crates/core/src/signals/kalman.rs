//! Constant-acceleration Kalman filtering of pose and acceleration measurements.
//!
//! Each translation axis is filtered over (position, velocity, acceleration). Orientation is
//! unwrapped into an accumulated rotation vector built from the increments between consecutive
//! samples, and each of its axes is filtered the same way to recover angular velocity and
//! acceleration.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::noise::NoiseSigmas;
use super::trajectory::rotation_log;
use crate::error::{invalid, Error, Result};
use crate::rigid_body::KinematicSample;

const MIN_ACC_SIGMA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    /// Jerk spectral density of the translation model.
    pub lin_process_noise: f64,
    /// Angular jerk spectral density of the rotation model.
    pub ang_process_noise: f64,
    pub position_sigma: f64,
    pub orientation_sigma: f64,
    pub lin_acc_sigma: f64,
    pub ang_acc_sigma: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            lin_process_noise: 10.0,
            ang_process_noise: 10.0,
            position_sigma: 1e-4,
            orientation_sigma: 1e-4,
            lin_acc_sigma: MIN_ACC_SIGMA,
            ang_acc_sigma: MIN_ACC_SIGMA,
        }
    }
}

impl KalmanConfig {
    /// Measurement noise matched to the injected acceleration noise.
    pub fn for_noise(noise: &NoiseSigmas) -> Self {
        Self {
            lin_acc_sigma: noise.lin_acc.max(MIN_ACC_SIGMA),
            ang_acc_sigma: noise.ang_acc.max(MIN_ACC_SIGMA),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredSample {
    pub sample: KinematicSample,
    /// Trace of the posterior covariance summed over all six axis filters.
    pub uncertainty: f64,
}

struct AxisModel {
    f: Matrix3<f64>,
    q: Matrix3<f64>,
    h: Matrix2x3<f64>,
    r: Matrix2<f64>,
}

impl AxisModel {
    fn new(dt: f64, spectral_density: f64, pos_sigma: f64, acc_sigma: f64) -> Self {
        let (d2, d3, d4, d5) = (dt * dt, dt.powi(3), dt.powi(4), dt.powi(5));
        let f = Matrix3::new(1.0, dt, 0.5 * d2, 0.0, 1.0, dt, 0.0, 0.0, 1.0);
        let q = Matrix3::new(
            d5 / 20.0,
            d4 / 8.0,
            d3 / 6.0,
            d4 / 8.0,
            d3 / 3.0,
            d2 / 2.0,
            d3 / 6.0,
            d2 / 2.0,
            dt,
        ) * spectral_density;
        let h = Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let r = Matrix2::new(pos_sigma * pos_sigma, 0.0, 0.0, acc_sigma * acc_sigma);
        Self { f, q, h, r }
    }
}

#[derive(Clone, Copy)]
struct AxisState {
    x: Vector3<f64>,
    p: Matrix3<f64>,
}

impl AxisState {
    fn init(model: &AxisModel, z: Vector2<f64>) -> Self {
        let mut s = Self {
            x: Vector3::new(z[0], 0.0, z[1]),
            p: Matrix3::from_diagonal(&Vector3::new(1.0, 1e2, 1e2)),
        };
        s.update(model, z);
        s
    }

    fn predict(&mut self, model: &AxisModel) {
        self.x = model.f * self.x;
        self.p = model.f * self.p * model.f.transpose() + model.q;
    }

    fn update(&mut self, model: &AxisModel, z: Vector2<f64>) {
        let h = &model.h;
        let s = h * self.p * h.transpose() + model.r;
        let s_inv = s.try_inverse().unwrap_or_else(Matrix2::zeros);
        let k = self.p * h.transpose() * s_inv;
        self.x += k * (z - h * self.x);
        let ikh = Matrix3::identity() - k * h;
        self.p = ikh * self.p * ikh.transpose() + k * model.r * k.transpose();
        self.p = (self.p + self.p.transpose()) * 0.5;
    }
}

/// Filters velocities and accelerations from the poses and (noisy) accelerations of a uniformly
/// sampled stream. Poses pass through unchanged.
pub fn kalman_smooth(samples: &[KinematicSample], config: &KalmanConfig) -> Result<Vec<FilteredSample>> {
    if samples.len() < 2 {
        return Err(invalid("Kalman filtering needs at least two samples"));
    }
    let dt = samples[1].t - samples[0].t;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NonUniformTimestamps { index: 1 });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt {
            return Err(Error::NonUniformTimestamps { index: i + 1 });
        }
    }
    for s in samples {
        s.validate()?;
    }

    let lin = AxisModel::new(dt, config.lin_process_noise, config.position_sigma, config.lin_acc_sigma);
    let ang = AxisModel::new(dt, config.ang_process_noise, config.orientation_sigma, config.ang_acc_sigma);

    let mut psi = Vector3::zeros();
    let mut filters: Option<[AxisState; 6]> = None;
    let mut out = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        if k > 0 {
            psi += rotation_log(&(s.rotation * samples[k - 1].rotation.transpose()));
        }
        let z = |axis: usize| {
            if axis < 3 {
                Vector2::new(s.translation[axis], s.lin_acc[axis])
            } else {
                Vector2::new(psi[axis - 3], s.ang_acc[axis - 3])
            }
        };
        let model = |axis: usize| if axis < 3 { &lin } else { &ang };
        let states = match filters.take() {
            None => std::array::from_fn(|axis| AxisState::init(model(axis), z(axis))),
            Some(mut states) => {
                for (axis, st) in states.iter_mut().enumerate() {
                    st.predict(model(axis));
                    st.update(model(axis), z(axis));
                }
                states
            }
        };
        let states = filters.insert(states);
        let component = |offset: usize, idx: usize| Vector3::from_fn(|i, _| states[offset + i].x[idx]);
        let mut filtered = *s;
        filtered.lin_vel = component(0, 1);
        filtered.lin_acc = component(0, 2);
        filtered.ang_vel = component(3, 1);
        filtered.ang_acc = component(3, 2);
        let uncertainty = states.iter().map(|st| st.p.trace()).sum();
        out.push(FilteredSample { sample: filtered, uncertainty });
    }
    Ok(out)
}

/// First index at which the uncertainty changed by less than `rel` over the preceding `window`
/// samples.
pub fn stabilized_index(uncertainty: &[f64], window: usize, rel: f64) -> Option<usize> {
    (window..uncertainty.len()).find(|&k| {
        let before = uncertainty[k - window];
        (uncertainty[k] - before).abs() <= rel * before.abs()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigid_body::Pose;
    use nalgebra::Rotation3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn constant_velocity(n: usize) -> Vec<KinematicSample> {
        let v = Vector3::new(0.1, -0.2, 0.05);
        let w = Vector3::new(0.0, 0.0, 0.5);
        (0..n)
            .map(|k| {
                let t = k as f64 * 0.01;
                let r = Rotation3::from_scaled_axis(w * t);
                let mut s = KinematicSample::at_rest(t, &Pose::new(*r.matrix(), v * t));
                s.lin_vel = v;
                s.ang_vel = w;
                s
            })
            .collect()
    }

    #[test]
    fn exact_on_constant_velocity() {
        let samples = constant_velocity(200);
        let out = kalman_smooth(&samples, &KalmanConfig::default()).unwrap();
        for (f, s) in out.iter().zip(&samples).skip(20) {
            assert!((f.sample.lin_vel - s.lin_vel).norm() < 1e-6, "{:?}", f.sample.lin_vel);
            assert!((f.sample.ang_vel - s.ang_vel).norm() < 1e-6, "{:?}", f.sample.ang_vel);
        }
    }

    #[test]
    fn covariance_is_monotone_for_constant_input() {
        let samples = constant_velocity(300);
        let out = kalman_smooth(&samples, &KalmanConfig::default()).unwrap();
        for w in out.windows(2) {
            assert!(w[1].uncertainty <= w[0].uncertainty * (1.0 + 1e-12));
        }
        let u: Vec<f64> = out.iter().map(|f| f.uncertainty).collect();
        assert!(stabilized_index(&u, 10, 0.01).is_some());
    }

    #[test]
    fn filtering_beats_differentiation_on_noisy_sinusoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pos_noise = Normal::new(0.0, 1e-3).unwrap();
        let acc_noise = Normal::new(0.0, 0.05).unwrap();
        let (amp, freq) = (0.1, 2.0 * std::f64::consts::PI * 0.5);
        let n = 1000;
        let truth: Vec<f64> = (0..n).map(|k| -amp * freq * freq * (freq * k as f64 * 0.01).sin()).collect();
        let samples: Vec<KinematicSample> = (0..n)
            .map(|k| {
                let t = k as f64 * 0.01;
                let mut s = KinematicSample::at_rest(t, &Pose::identity());
                s.translation.x = amp * (freq * t).sin() + pos_noise.sample(&mut rng);
                s.lin_acc.x = truth[k] + acc_noise.sample(&mut rng);
                s
            })
            .collect();
        let cfg = KalmanConfig { position_sigma: 1e-3, lin_acc_sigma: 0.05, ..KalmanConfig::default() };
        let out = kalman_smooth(&samples, &cfg).unwrap();
        let rmse = |f: &dyn Fn(usize) -> f64| ((50..n - 1).map(|k| (f(k) - truth[k]).powi(2)).sum::<f64>() / (n - 51) as f64).sqrt();
        let filtered = rmse(&|k| out[k].sample.lin_acc.x);
        let differenced =
            rmse(&|k| (samples[k + 1].translation.x - 2.0 * samples[k].translation.x + samples[k - 1].translation.x) / 1e-4);
        assert!(filtered < differenced, "{filtered} vs {differenced}");
        assert!(filtered < 0.05);
    }

    #[test]
    fn rejects_bad_timing() {
        let mut samples = constant_velocity(10);
        samples[5].t += 0.003;
        assert!(matches!(
            kalman_smooth(&samples, &KalmanConfig::default()),
            Err(Error::NonUniformTimestamps { index: 5 })
        ));
        assert!(kalman_smooth(&samples[..1], &KalmanConfig::default()).is_err());
    }
}
