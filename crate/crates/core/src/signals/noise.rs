use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rigid_body::{body_wrench, GravityConvention, InertialParams, KinematicSample, Wrench};

/// Standard deviations of the zero-mean Gaussian noise added to each channel.
///
/// Units are assumed per column: rad/s², m/s², N and N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSigmas {
    pub ang_acc: f64,
    pub lin_acc: f64,
    pub force: f64,
    pub torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    None,
    Low,
    Moderate,
    High,
}

impl NoiseLevel {
    pub const ALL: [NoiseLevel; 4] = [NoiseLevel::None, NoiseLevel::Low, NoiseLevel::Moderate, NoiseLevel::High];

    pub fn sigmas(&self) -> NoiseSigmas {
        let (ang_acc, lin_acc, force, torque) = match self {
            NoiseLevel::None => (0.0, 0.0, 0.0, 0.0),
            NoiseLevel::Low => (0.25, 0.025, 0.05, 0.0025),
            NoiseLevel::Moderate => (0.5, 0.05, 0.1, 0.005),
            NoiseLevel::High => (1.0, 0.1, 0.33, 0.0067),
        };
        NoiseSigmas { ang_acc, lin_acc, force, torque }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseLevel::None => "none",
            NoiseLevel::Low => "low",
            NoiseLevel::Moderate => "moderate",
            NoiseLevel::High => "high",
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseLevel::ALL
            .into_iter()
            .find(|n| n.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown noise level `{s}`")))
    }
}

/// One synchronized kinematic sample and sensor wrench (body frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub sample: KinematicSample,
    pub wrench: Wrench,
}

/// Forward-simulates the sensor wrench of `params` along `states` and corrupts the
/// accelerations and the wrench with i.i.d. Gaussian noise.
pub fn simulate_measurements(
    params: &InertialParams,
    states: &[KinematicSample],
    noise: &NoiseSigmas,
    gravity: &GravityConvention,
    seed: u64,
) -> Result<Vec<Measurement>> {
    if states.is_empty() {
        return Err(invalid("no kinematic samples to simulate"));
    }
    let sigmas = [noise.ang_acc, noise.lin_acc, noise.force, noise.torque];
    if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(invalid("noise standard deviations must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut draw = |sigma: f64| -> Vector3<f64> {
        if sigma == 0.0 {
            Vector3::zeros()
        } else {
            Vector3::from_fn(|_, _| sigma * normal.sample(&mut rng))
        }
    };

    states
        .iter()
        .map(|state| {
            let clean = body_wrench(params, state, gravity)?;
            let mut sample = *state;
            let mut wrench = clean;
            // Fixed draw order: α, a, f, τ.
            let (da, dl, df, dt) = (draw(noise.ang_acc), draw(noise.lin_acc), draw(noise.force), draw(noise.torque));
            if noise.ang_acc > 0.0 {
                sample.ang_acc += da;
            }
            if noise.lin_acc > 0.0 {
                sample.lin_acc += dl;
            }
            if noise.force > 0.0 {
                wrench.force += df;
            }
            if noise.torque > 0.0 {
                wrench.torque += dt;
            }
            Ok(Measurement { sample, wrench })
        })
        .collect()
}
