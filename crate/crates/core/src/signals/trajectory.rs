use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use crate::error::{invalid, Result};
use crate::rigid_body::{KinematicSample, Pose};

/// Joint-angle period divisor of the excitation sinusoids.
pub const PERIOD_DIVISOR: f64 = 240.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Fourth-order central differences of the pose sequence; rotation rates from matrix
    /// logarithms of relative rotations.
    #[default]
    CentralDifference,
    /// Exact propagation through the chain.
    Analytic,
}

/// Sinusoidal joint excitation `qₙ(t) = αₙ + Aₙ·sin(2π·fₙ·s·t / 240)` with speed factor `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub duration: f64,
    pub rate: f64,
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub initial_angles: Vec<f64>,
    pub speed_scale: f64,
    #[serde(default)]
    pub derivatives: DerivativeMethod,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        let amp = 45f64.to_radians();
        Self {
            duration: 35.0,
            rate: 100.0,
            amplitudes: vec![0.0, 0.0, 0.0, amp, amp, amp],
            frequencies: vec![0.0, 0.0, 0.0, 0.1, 0.13, 0.16],
            initial_angles: vec![0.0, 0.6, -1.0, 0.4, 0.8, 0.3],
            speed_scale: 1.0,
            derivatives: DerivativeMethod::CentralDifference,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self, dof: usize) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration must be positive"));
        }
        if !self.speed_scale.is_finite() || self.speed_scale < 0.0 {
            return Err(invalid("speed scale must be finite and non-negative"));
        }
        for (name, v) in [("amplitudes", &self.amplitudes), ("frequencies", &self.frequencies), ("initial_angles", &self.initial_angles)] {
            if v.len() != dof {
                return Err(invalid(format!("{name} has {} entries for a {dof}-joint chain", v.len())));
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.rate).round().max(1.0) as usize
    }

    fn omegas(&self) -> Vec<f64> {
        self.frequencies.iter().map(|f| 2.0 * PI * f * self.speed_scale / PERIOD_DIVISOR).collect()
    }

    /// Joint angles, rates and accelerations at time `t`.
    pub fn joint_state(&self, t: f64) -> [Vec<f64>; 3] {
        let mut q = Vec::with_capacity(self.amplitudes.len());
        let mut dq = Vec::with_capacity(q.capacity());
        let mut ddq = Vec::with_capacity(q.capacity());
        for ((&a, &w), &q0) in self.amplitudes.iter().zip(self.omegas().iter()).zip(&self.initial_angles) {
            let (s, c) = (w * t).sin_cos();
            q.push(q0 + a * s);
            dq.push(a * w * c);
            ddq.push(-a * w * w * s);
        }
        [q, dq, ddq]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<KinematicSample>,
    pub avg_ang_speed: f64,
    pub avg_lin_speed: f64,
}

/// Rotation vector of a rotation matrix.
pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    Rotation3::from_matrix_unchecked(*r).scaled_axis()
}

fn d1(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

fn d1v(m2: &Vector3<f64>, m1: &Vector3<f64>, p1: &Vector3<f64>, p2: &Vector3<f64>, h: f64) -> Vector3<f64> {
    Vector3::from_fn(|i, _| d1(m2[i], m1[i], p1[i], p2[i], h))
}

fn d2v(m2: &Vector3<f64>, m1: &Vector3<f64>, c: &Vector3<f64>, p1: &Vector3<f64>, p2: &Vector3<f64>, h: f64) -> Vector3<f64> {
    (-m2 + m1 * 16.0 - c * 30.0 + p1 * 16.0 - p2) / (12.0 * h * h)
}

pub fn generate_trajectory(chain: &KinematicChain, config: &TrajectoryConfig) -> Result<Trajectory> {
    chain.validate()?;
    config.validate(chain.dof())?;
    let h = 1.0 / config.rate;
    let n = config.sample_count();
    let pose_at = |k: isize| -> Result<Pose> {
        let [q, _, _] = config.joint_state(k as f64 * h);
        chain.forward_kinematics(&q)
    };

    let samples: Vec<KinematicSample> = match config.derivatives {
        DerivativeMethod::Analytic => (0..n)
            .map(|k| {
                let t = k as f64 * h;
                let [q, dq, ddq] = config.joint_state(t);
                let m = chain.end_motion(&q, &dq, &ddq)?;
                Ok(KinematicSample {
                    t,
                    rotation: m.pose.rotation,
                    translation: m.pose.translation,
                    lin_vel: m.lin_vel,
                    ang_vel: m.ang_vel,
                    lin_acc: m.lin_acc,
                    ang_acc: m.ang_acc,
                })
            })
            .collect::<Result<_>>()?,
        DerivativeMethod::CentralDifference => {
            // Poses on k = -4 ..= n+3 so every stencil is centred.
            let pad = 4isize;
            let poses: Vec<Pose> = (-pad..n as isize + pad).map(pose_at).collect::<Result<_>>()?;
            let at = |k: isize| &poses[(k + pad) as usize];
            let omega = |k: isize| {
                let rt = at(k).rotation.transpose();
                let phi = |j: isize| rotation_log(&(at(k + j).rotation * rt));
                d1v(&phi(-2), &phi(-1), &phi(1), &phi(2), h)
            };
            let omegas: Vec<Vector3<f64>> = (-2..n as isize + 2).map(omega).collect();
            let w = |k: isize| &omegas[(k + 2) as usize];
            (0..n as isize)
                .map(|k| {
                    let tr = |j: isize| at(k + j).translation;
                    Ok(KinematicSample {
                        t: k as f64 * h,
                        rotation: at(k).rotation,
                        translation: at(k).translation,
                        lin_vel: d1v(&tr(-2), &tr(-1), &tr(1), &tr(2), h),
                        ang_vel: *w(k),
                        lin_acc: d2v(&tr(-2), &tr(-1), &tr(0), &tr(1), &tr(2), h),
                        ang_acc: d1v(w(k - 2), w(k - 1), w(k + 1), w(k + 2), h),
                    })
                })
                .collect::<Result<_>>()?
        }
    };

    let avg = |f: fn(&KinematicSample) -> f64| samples.iter().map(f).sum::<f64>() / samples.len() as f64;
    let avg_ang_speed = avg(|s| s.ang_vel.norm());
    let avg_lin_speed = avg(|s| s.lin_vel.norm());
    Ok(Trajectory { samples, avg_ang_speed, avg_lin_speed })
}

/// Average `‖ω‖` over the sampling grid of `config`, computed through the chain.
pub fn average_angular_speed(chain: &KinematicChain, config: &TrajectoryConfig) -> Result<f64> {
    config.validate(chain.dof())?;
    let n = config.sample_count();
    let mut total = 0.0;
    for k in 0..n {
        let [q, dq, ddq] = config.joint_state(k as f64 / config.rate);
        total += chain.end_motion(&q, &dq, &ddq)?.ang_vel.norm();
    }
    Ok(total / n as f64)
}

/// Speed factor at which the trajectory reaches `target` average angular speed (rad/s).
pub fn calibrate_speed(chain: &KinematicChain, config: &TrajectoryConfig, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return Err(invalid("target angular speed must be positive"));
    }
    let speed_at = |s: f64| {
        let mut c = config.clone();
        c.speed_scale = s;
        average_angular_speed(chain, &c)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while speed_at(hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(invalid("trajectory cannot reach the requested angular speed"));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if speed_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
