//! Trajectories, simulated sensor streams and their filtering.

mod chain;
mod kalman;
mod noise;
mod trajectory;

pub use chain::{EndMotion, Joint, KinematicChain};
pub use kalman::{kalman_smooth, stabilized_index, FilteredSample, KalmanConfig};
pub use noise::{simulate_measurements, Measurement, NoiseLevel, NoiseSigmas};
pub use trajectory::{
    average_angular_speed, calibrate_speed, generate_trajectory, rotation_log, DerivativeMethod, Trajectory,
    TrajectoryConfig, PERIOD_DIVISOR,
};

use serde::{Deserialize, Serialize};

use crate::rigid_body::KinematicSample;

/// Normalizers of the dynamism measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamismNormalizers {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl Default for DynamismNormalizers {
    fn default() -> Self {
        Self { n1: 1.0, n2: 1.0, n3: 0.5 }
    }
}

/// `‖[‖a‖/n1, ‖α‖/n2, ‖ω‖/n3]‖²`, with `a` the gravity-free acceleration of the sample.
pub fn dynamism(sample: &KinematicSample, n: &DynamismNormalizers) -> f64 {
    (sample.lin_acc.norm() / n.n1).powi(2) + (sample.ang_acc.norm() / n.n2).powi(2) + (sample.ang_vel.norm() / n.n3).powi(2)
}

/// Replaces a moving trajectory by `holds` rest poses taken at evenly spaced instants, each held
/// for `samples_per_hold` samples at the original rate.
pub fn stop_and_go(samples: &[KinematicSample], holds: usize, samples_per_hold: usize) -> Vec<KinematicSample> {
    if samples.is_empty() || holds == 0 {
        return Vec::new();
    }
    let dt = if samples.len() > 1 { samples[1].t - samples[0].t } else { 0.01 };
    let mut out = Vec::with_capacity(holds * samples_per_hold);
    for h in 0..holds {
        let idx = if holds == 1 { 0 } else { h * (samples.len() - 1) / (holds - 1) };
        let pose = samples[idx].pose();
        for _ in 0..samples_per_hold {
            out.push(KinematicSample::at_rest(out.len() as f64 * dt, &pose));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigid_body::Pose;
    use nalgebra::Vector3;

    #[test]
    fn dynamism_values() {
        let n = DynamismNormalizers::default();
        let mut s = KinematicSample::at_rest(0.0, &Pose::identity());
        assert_eq!(dynamism(&s, &n), 0.0);
        s.lin_acc = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(dynamism(&s, &n), 1.0);
        s.lin_acc = Vector3::zeros();
        s.ang_vel = Vector3::new(0.5, 0.0, 0.0);
        assert_eq!(dynamism(&s, &n), 1.0);
    }

    #[test]
    fn stop_and_go_is_static() {
        let cfg = TrajectoryConfig { duration: 2.0, speed_scale: 300.0, ..Default::default() };
        let tr = generate_trajectory(&KinematicChain::default(), &cfg).unwrap();
        let sg = stop_and_go(&tr.samples, 5, 10);
        assert_eq!(sg.len(), 50);
        assert!(sg.iter().all(|s| s.ang_vel == Vector3::zeros() && s.lin_acc == Vector3::zeros()));
        assert_eq!(sg[0].rotation, tr.samples[0].rotation);
        assert_eq!(sg[49].rotation, tr.samples[199].rotation);
    }
}
