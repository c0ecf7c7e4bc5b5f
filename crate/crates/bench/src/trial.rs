//! One simulated identification experiment: object, motion, sensor stream and estimators.

use std::time::Instant;

use nalgebra::Vector3;
use pmd_core::discretization::{build_test_object, sample_points, Configuration, TestObject, TestObjectConfig, TestObjectGeometry};
use pmd_core::estimation::{
    ols_identify, pmd_identify, rtls_identify, stacked_body_regressor, EstimateReport, EstimationBatch, Estimator,
    PmdConfig, RtlsConfig,
};
use pmd_core::metrics::{condition_number_scaled, error_metrics, ErrorReport, ObjectExtent};
use pmd_core::rigid_body::{GravityConvention, InertialParams};
use pmd_core::signals::{
    calibrate_speed, generate_trajectory, kalman_smooth, simulate_measurements, stop_and_go, KalmanConfig,
    KinematicChain, Measurement, NoiseLevel, TrajectoryConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Filter whenever noise is injected.
    #[default]
    Auto,
    On,
    Off,
}

impl FilterMode {
    pub fn applies(&self, noise: NoiseLevel) -> bool {
        match self {
            FilterMode::Auto => noise != NoiseLevel::None,
            FilterMode::On => true,
            FilterMode::Off => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Motion {
    #[default]
    Continuous,
    /// Rest poses sampled along the trajectory, each held for `samples_per_hold` samples.
    StopAndGo { holds: usize, samples_per_hold: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialSpec {
    pub configuration: Configuration,
    pub geometry: TestObjectGeometry,
    /// Points per cubic centimetre.
    pub density: f64,
    pub chain: KinematicChain,
    pub trajectory: TrajectoryConfig,
    /// Average angular speed (rad/s) the trajectory is scaled to; `None` keeps its speed factor.
    pub target_speed: Option<f64>,
    pub motion: Motion,
    pub noise: NoiseLevel,
    pub filter: FilterMode,
    /// Number of timesteps handed to the estimators. The trajectory is generated for exactly
    /// this window when set.
    pub observations: Option<usize>,
    /// Additional, shorter windows evaluated on prefixes of the same stream.
    pub checkpoints: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub pmd: PmdConfig,
    pub rtls: RtlsConfig,
    pub gravity: GravityConvention,
    pub seed: u64,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            configuration: Configuration::Hammer,
            geometry: TestObjectGeometry::default(),
            density: 0.04,
            chain: KinematicChain::default(),
            trajectory: TrajectoryConfig::default(),
            target_speed: Some(1.0),
            motion: Motion::Continuous,
            noise: NoiseLevel::Moderate,
            filter: FilterMode::Auto,
            observations: Some(150),
            checkpoints: Vec::new(),
            estimators: Estimator::ALL.to_vec(),
            pmd: PmdConfig::default(),
            rtls: RtlsConfig::default(),
            gravity: GravityConvention::default(),
            seed: 0,
        }
    }
}

impl TrialSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.density.is_finite() && self.density > 0.0, "density must be positive");
        anyhow::ensure!(!self.estimators.is_empty(), "no estimator selected");
        anyhow::ensure!(self.observations != Some(0), "observation cap must be positive");
        if let Some(s) = self.target_speed {
            anyhow::ensure!(s.is_finite() && s > 0.0, "target speed must be positive");
        }
        if let Motion::StopAndGo { holds, samples_per_hold } = self.motion {
            anyhow::ensure!(holds > 0 && samples_per_hold > 0, "stop-and-go needs holds and samples per hold");
        }
        self.pmd.validate()?;
        Ok(())
    }

    /// Noise and point sampling use decorrelated streams derived from the one seed.
    pub fn noise_seed(&self) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1)
    }
}

/// Everything produced before estimation; shared by all estimators of a trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub object: TestObject,
    pub points: Vec<Vector3<f64>>,
    /// Raw measured stream: true poses, noisy accelerations and wrenches.
    pub measurements: Vec<Measurement>,
    /// What the estimators consume: filtered (if configured) and capped.
    pub batch: EstimationBatch,
    pub speed_scale: f64,
    pub avg_ang_speed: f64,
    pub avg_lin_speed: f64,
}

pub fn prepare_trial(spec: &TrialSpec) -> anyhow::Result<TrialData> {
    spec.validate()?;
    let object = build_test_object(&TestObjectConfig { configuration: spec.configuration, geometry: spec.geometry.clone() })?;
    let points = sample_points(&object.shape, spec.density, spec.seed)?.positions;

    let mut traj = spec.trajectory.clone();
    if let (Some(n), Motion::Continuous) = (spec.observations, spec.motion) {
        traj.duration = n as f64 / traj.rate;
    }
    if let Some(target) = spec.target_speed {
        traj.speed_scale = calibrate_speed(&spec.chain, &traj, target)?;
    }
    let trajectory = generate_trajectory(&spec.chain, &traj)?;
    let states = match spec.motion {
        Motion::Continuous => trajectory.samples.clone(),
        Motion::StopAndGo { holds, samples_per_hold } => stop_and_go(&trajectory.samples, holds, samples_per_hold),
    };
    let measurements =
        simulate_measurements(&object.truth, &states, &spec.noise.sigmas(), &spec.gravity, spec.noise_seed())?;
    let batch = estimation_batch(&measurements, spec.noise, spec.filter)?;
    let batch = match spec.observations {
        Some(n) => batch.truncated(n),
        None => batch,
    };
    let n = batch.len() as f64;
    let avg_ang_speed = batch.samples.iter().map(|s| s.ang_vel.norm()).sum::<f64>() / n;
    let avg_lin_speed = batch.samples.iter().map(|s| s.lin_vel.norm()).sum::<f64>() / n;
    Ok(TrialData { object, points, measurements, batch, speed_scale: traj.speed_scale, avg_ang_speed, avg_lin_speed })
}

/// Turns a measured stream into estimator input, filtering the kinematics when `filter`
/// applies at this noise level.
pub fn estimation_batch(measurements: &[Measurement], noise: NoiseLevel, filter: FilterMode) -> anyhow::Result<EstimationBatch> {
    let batch = EstimationBatch::from_measurements(measurements)?;
    if !filter.applies(noise) || measurements.len() < 2 {
        return Ok(batch);
    }
    let filtered = kalman_smooth(&batch.samples, &KalmanConfig::for_noise(&noise.sigmas()))?;
    Ok(EstimationBatch::new(filtered.into_iter().map(|f| f.sample).collect(), batch.wrenches)?)
}

pub fn run_estimator(
    estimator: Estimator,
    batch: &EstimationBatch,
    points: &[Vector3<f64>],
    spec: &TrialSpec,
) -> pmd_core::Result<EstimateReport> {
    match estimator {
        Estimator::Pmd => pmd_identify(batch, points, &spec.pmd, &spec.gravity),
        Estimator::Ols => ols_identify(batch, &spec.gravity),
        Estimator::Rtls => rtls_identify(batch, &spec.rtls, &spec.gravity).map(|o| o.report),
    }
}

/// One estimator evaluated on one window of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub cell: usize,
    pub configuration: Configuration,
    pub noise: NoiseLevel,
    pub target_speed: f64,
    pub density: f64,
    pub c1: f64,
    pub lambda: f64,
    pub seed: u64,
    pub estimator: Estimator,
    /// Timesteps used.
    pub observations: usize,
    /// Duration of the window in seconds.
    pub window: f64,
    pub points: usize,
    pub ok: bool,
    pub error: String,
    pub mass_err: f64,
    pub com_err: f64,
    pub inertia_err: f64,
    pub com_err_x: f64,
    pub com_err_y: f64,
    pub com_err_z: f64,
    pub consistent: bool,
    pub min_eigenvalue: f64,
    pub wall_time: f64,
    pub iterations: usize,
    pub condition_number: f64,
    pub avg_ang_speed: f64,
    pub avg_lin_speed: f64,
    pub m: f64,
    pub mcx: f64,
    pub mcy: f64,
    pub mcz: f64,
    pub jxx: f64,
    pub jxy: f64,
    pub jxz: f64,
    pub jyy: f64,
    pub jyz: f64,
    pub jzz: f64,
}

impl TrialRow {
    /// A row carrying only the spec's identifying fields; every measured field is empty.
    pub fn blank(cell: usize, spec: &TrialSpec, estimator: Estimator) -> Self {
        Self {
            cell,
            configuration: spec.configuration,
            noise: spec.noise,
            target_speed: spec.target_speed.unwrap_or(f64::NAN),
            density: spec.density,
            c1: spec.pmd.c1,
            lambda: spec.pmd.lambda,
            seed: spec.seed,
            estimator,
            observations: 0,
            window: 0.0,
            points: 0,
            ok: false,
            error: String::new(),
            mass_err: f64::NAN,
            com_err: f64::NAN,
            inertia_err: f64::NAN,
            com_err_x: f64::NAN,
            com_err_y: f64::NAN,
            com_err_z: f64::NAN,
            consistent: false,
            min_eigenvalue: f64::NAN,
            wall_time: f64::NAN,
            iterations: 0,
            condition_number: f64::NAN,
            avg_ang_speed: f64::NAN,
            avg_lin_speed: f64::NAN,
            m: f64::NAN,
            mcx: f64::NAN,
            mcy: f64::NAN,
            mcz: f64::NAN,
            jxx: f64::NAN,
            jxy: f64::NAN,
            jxz: f64::NAN,
            jyy: f64::NAN,
            jyz: f64::NAN,
            jzz: f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub rows: Vec<TrialRow>,
    pub truth: InertialParams,
    /// Reports of the full window, in estimator order.
    pub reports: Vec<pmd_core::Result<EstimateReport>>,
}

pub fn run_trial(spec: &TrialSpec) -> anyhow::Result<TrialResult> {
    run_trial_cell(spec, 0)
}

pub fn run_trial_cell(spec: &TrialSpec, cell: usize) -> anyhow::Result<TrialResult> {
    let data = prepare_trial(spec)?;
    let extent = ObjectExtent::from_vector(&data.object.extent)?;
    let full = data.batch.len();
    let mut windows: Vec<usize> = spec.checkpoints.iter().copied().filter(|&n| n > 0 && n < full).collect();
    windows.sort_unstable();
    windows.dedup();
    windows.push(full);

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in &windows {
        let batch = data.batch.truncated(n);
        let kappa = stacked_body_regressor(&batch, &spec.gravity)
            .ok()
            .and_then(|(a, _)| condition_number_scaled(&a).ok())
            .map_or(f64::NAN, |c| c.kappa);
        for &estimator in &spec.estimators {
            let start = Instant::now();
            let result = run_estimator(estimator, &batch, &data.points, spec);
            let elapsed = start.elapsed().as_secs_f64();
            let mut row = TrialRow::blank(cell, spec, estimator);
            row.observations = n;
            row.window = n as f64 / spec.trajectory.rate;
            row.points = data.points.len();
            row.wall_time = elapsed;
            row.condition_number = kappa;
            row.avg_ang_speed = data.avg_ang_speed;
            row.avg_lin_speed = data.avg_lin_speed;
            match &result {
                Ok(report) => fill_row(&mut row, report, &data.object.truth, &extent),
                Err(e) => row.error = e.to_string(),
            }
            rows.push(row);
            if n == full {
                reports.push(result);
            }
        }
    }
    Ok(TrialResult { rows, truth: data.object.truth, reports })
}

fn fill_row(row: &mut TrialRow, report: &EstimateReport, truth: &InertialParams, extent: &ObjectExtent) {
    row.consistent = report.consistent;
    row.min_eigenvalue = report.min_eigenvalue;
    row.iterations = report.iterations;
    let v = report.theta.to_vector();
    [row.m, row.mcx, row.mcy, row.mcz, row.jxx, row.jxy, row.jxz, row.jyy, row.jyz, row.jzz] =
        std::array::from_fn(|i| v[i]);
    match error_metrics(&report.theta, truth, extent) {
        Ok(ErrorReport { mass, com, com_avg, inertia_avg, .. }) => {
            row.ok = report.theta.is_finite();
            row.mass_err = mass;
            row.com_err = com_avg;
            row.inertia_err = inertia_avg;
            [row.com_err_x, row.com_err_y, row.com_err_z] = com;
        }
        Err(e) => row.error = e.to_string(),
    }
}
