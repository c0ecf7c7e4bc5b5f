//! File formats: measurement datasets, point sets, estimate reports and ground truth.
//!
//! Floats are written in shortest round-trip form, so a dataset read back is bit-identical to
//! the stream that was written.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use nalgebra::{Matrix3, Vector3};
use pmd_core::discretization::Configuration;
use pmd_core::estimation::{EstimateReport, Estimator};
use pmd_core::metrics::ErrorReport;
use pmd_core::rigid_body::{Frame, GravityConvention, InertialParams, KinematicSample, ParamVector, Wrench};
use pmd_core::signals::{Measurement, NoiseLevel};
use serde::{Deserialize, Serialize};

use crate::trial::FilterMode;

pub const DATASET_VERSION: u32 = 1;
const DATASET_MAGIC: &str = "pmd-dataset";

/// Header metadata of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetMeta {
    pub version: u32,
    /// Noise level the stream was generated with; drives automatic filtering.
    pub noise: NoiseLevel,
    pub filter: FilterMode,
    pub gravity: GravityConvention,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        Self { version: DATASET_VERSION, noise: NoiseLevel::None, filter: FilterMode::Auto, gravity: GravityConvention::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub measurements: Vec<Measurement>,
}

/// One CSV line: time, pose `[R|t]` row-major, v, ω, a, α, f, τ. The wrench is in body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct DatasetRow {
    t: f64,
    r00: f64,
    r01: f64,
    r02: f64,
    tx: f64,
    r10: f64,
    r11: f64,
    r12: f64,
    ty: f64,
    r20: f64,
    r21: f64,
    r22: f64,
    tz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    wx: f64,
    wy: f64,
    wz: f64,
    ax: f64,
    ay: f64,
    az: f64,
    alx: f64,
    aly: f64,
    alz: f64,
    fx: f64,
    fy: f64,
    fz: f64,
    mx: f64,
    my: f64,
    mz: f64,
}

impl DatasetRow {
    fn from_measurement(m: &Measurement) -> Self {
        let s = &m.sample;
        let r = &s.rotation;
        let w = &m.wrench;
        Self {
            t: s.t,
            r00: r[(0, 0)],
            r01: r[(0, 1)],
            r02: r[(0, 2)],
            tx: s.translation.x,
            r10: r[(1, 0)],
            r11: r[(1, 1)],
            r12: r[(1, 2)],
            ty: s.translation.y,
            r20: r[(2, 0)],
            r21: r[(2, 1)],
            r22: r[(2, 2)],
            tz: s.translation.z,
            vx: s.lin_vel.x,
            vy: s.lin_vel.y,
            vz: s.lin_vel.z,
            wx: s.ang_vel.x,
            wy: s.ang_vel.y,
            wz: s.ang_vel.z,
            ax: s.lin_acc.x,
            ay: s.lin_acc.y,
            az: s.lin_acc.z,
            alx: s.ang_acc.x,
            aly: s.ang_acc.y,
            alz: s.ang_acc.z,
            fx: w.force.x,
            fy: w.force.y,
            fz: w.force.z,
            mx: w.torque.x,
            my: w.torque.y,
            mz: w.torque.z,
        }
    }

    fn to_measurement(self) -> Measurement {
        let sample = KinematicSample {
            t: self.t,
            rotation: Matrix3::new(self.r00, self.r01, self.r02, self.r10, self.r11, self.r12, self.r20, self.r21, self.r22),
            translation: Vector3::new(self.tx, self.ty, self.tz),
            lin_vel: Vector3::new(self.vx, self.vy, self.vz),
            ang_vel: Vector3::new(self.wx, self.wy, self.wz),
            lin_acc: Vector3::new(self.ax, self.ay, self.az),
            ang_acc: Vector3::new(self.alx, self.aly, self.alz),
        };
        let wrench = Wrench::new(Vector3::new(self.fx, self.fy, self.fz), Vector3::new(self.mx, self.my, self.mz), Frame::Body);
        Measurement { sample, wrench }
    }
}

fn filter_name(f: FilterMode) -> &'static str {
    match f {
        FilterMode::Auto => "auto",
        FilterMode::On => "on",
        FilterMode::Off => "off",
    }
}

pub fn parse_filter(s: &str) -> anyhow::Result<FilterMode> {
    Ok(match s {
        "auto" => FilterMode::Auto,
        "on" => FilterMode::On,
        "off" => FilterMode::Off,
        other => bail!("unknown filter mode `{other}` (expected auto, on or off)"),
    })
}

pub fn write_dataset_string(ds: &Dataset) -> anyhow::Result<String> {
    let g = ds.meta.gravity.g;
    let mut out = format!(
        "# {DATASET_MAGIC} v{}\n# noise={}\n# filter={}\n# gravity={},{},{}\n# wrench_frame=body\n",
        ds.meta.version,
        ds.meta.noise,
        filter_name(ds.meta.filter),
        g.x,
        g.y,
        g.z
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in &ds.measurements {
        w.serialize(DatasetRow::from_measurement(m))?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(out)
}

pub fn read_dataset_str(text: &str) -> anyhow::Result<Dataset> {
    let mut lines = text.lines();
    let first = lines.next().context("empty dataset file")?;
    let version = first
        .strip_prefix("# ")
        .and_then(|s| s.strip_prefix(DATASET_MAGIC))
        .and_then(|s| s.trim().strip_prefix('v'))
        .context("missing `# pmd-dataset v<N>` header line")?
        .parse::<u32>()
        .context("bad dataset version")?;
    if version != DATASET_VERSION {
        bail!("unsupported dataset version {version}");
    }
    let mut meta = DatasetMeta { version, ..Default::default() };
    let mut body = String::new();
    for line in text.lines().skip(1) {
        if let Some(kv) = line.strip_prefix('#') {
            let Some((k, v)) = kv.trim().split_once('=') else { continue };
            match k.trim() {
                "noise" => meta.noise = v.trim().parse()?,
                "filter" => meta.filter = parse_filter(v.trim())?,
                "gravity" => {
                    let g: Vec<f64> = v.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?;
                    if g.len() != 3 {
                        bail!("gravity needs three components");
                    }
                    meta.gravity = GravityConvention::new(Vector3::new(g[0], g[1], g[2]));
                }
                "wrench_frame" if v.trim() != "body" => bail!("only body-frame wrenches are supported"),
                _ => {}
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let measurements = r
        .deserialize::<DatasetRow>()
        .enumerate()
        .map(|(i, row)| row.map(DatasetRow::to_measurement).with_context(|| format!("dataset row {}", i + 1)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if measurements.is_empty() {
        bail!("dataset has no rows");
    }
    Ok(Dataset { meta, measurements })
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> anyhow::Result<()> {
    fs::write(path, write_dataset_string(ds)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_dataset_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: f64,
    mass: f64,
}

pub fn write_points(path: &Path, positions: &[Vector3<f64>], masses: &[f64]) -> anyhow::Result<()> {
    if positions.len() != masses.len() {
        bail!("{} positions but {} masses", positions.len(), masses.len());
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for (p, &mass) in positions.iter().zip(masses) {
        w.serialize(PointRow { x: p.x, y: p.y, z: p.z, mass })?;
    }
    w.flush()?;
    Ok(())
}

/// Body-frame positions and the mass column.
pub fn read_points(path: &Path) -> anyhow::Result<(Vec<Vector3<f64>>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize::<PointRow>().collect::<Result<Vec<_>, _>>().with_context(|| format!("parsing {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} holds no points", path.display());
    }
    Ok(rows.iter().map(|p| (Vector3::new(p.x, p.y, p.z), p.mass)).unzip())
}

/// The ten inertial parameters under their conventional names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaFields {
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

impl From<&InertialParams> for ThetaFields {
    fn from(p: &InertialParams) -> Self {
        let v = p.to_vector();
        Self { m: v[0], mcx: v[1], mcy: v[2], mcz: v[3], jxx: v[4], jxy: v[5], jxz: v[6], jyy: v[7], jyz: v[8], jzz: v[9] }
    }
}

impl ThetaFields {
    pub fn to_params(&self) -> InertialParams {
        let v = ParamVector::from_column_slice(&[
            self.m, self.mcx, self.mcy, self.mcz, self.jxx, self.jxy, self.jxz, self.jyy, self.jyz, self.jzz,
        ]);
        InertialParams::from_vector(&v, Frame::Body)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorFields {
    pub mass: f64,
    pub com: f64,
    pub inertia: f64,
}

impl From<&ErrorReport> for ErrorFields {
    fn from(e: &ErrorReport) -> Self {
        Self { mass: e.mass, com: e.com_avg, inertia: e.inertia_avg }
    }
}

/// Structured text form of an [`EstimateReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub estimator: Estimator,
    pub consistent: bool,
    pub min_eigenvalue: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub residual_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_residual_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_residual_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub rank_deficient: bool,
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    pub theta: ThetaFields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorFields>,
}

impl ReportDoc {
    pub fn new(report: &EstimateReport, errors: Option<&ErrorReport>) -> Self {
        Self {
            estimator: report.estimator,
            consistent: report.consistent,
            min_eigenvalue: report.min_eigenvalue,
            iterations: report.iterations,
            wall_time: report.wall_time,
            residual_norm: report.residual_norm,
            reduced_residual_norm: report.reduced_residual_norm,
            full_residual_norm: report.full_residual_norm,
            rank: report.rank,
            rank_deficient: report.rank_deficient,
            ambiguous: report.ambiguous,
            masses: report.masses.clone(),
            theta: ThetaFields::from(&report.theta),
            errors: errors.map(ErrorFields::from),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReportRow {
    estimator: Estimator,
    m: f64,
    mcx: f64,
    mcy: f64,
    mcz: f64,
    jxx: f64,
    jxy: f64,
    jxz: f64,
    jyy: f64,
    jyz: f64,
    jzz: f64,
    consistent: bool,
    min_eigenvalue: f64,
    iterations: usize,
    wall_time: f64,
    residual_norm: f64,
    rank_deficient: bool,
    ambiguous: bool,
    mass_err: Option<f64>,
    com_err: Option<f64>,
    inertia_err: Option<f64>,
}

pub fn write_report_csv(path: &Path, docs: &[ReportDoc]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for d in docs {
        let t = d.theta;
        w.serialize(ReportRow {
            estimator: d.estimator,
            m: t.m,
            mcx: t.mcx,
            mcy: t.mcy,
            mcz: t.mcz,
            jxx: t.jxx,
            jxy: t.jxy,
            jxz: t.jxz,
            jyy: t.jyy,
            jyz: t.jyz,
            jzz: t.jzz,
            consistent: d.consistent,
            min_eigenvalue: d.min_eigenvalue,
            iterations: d.iterations,
            wall_time: d.wall_time,
            residual_norm: d.residual_norm,
            rank_deficient: d.rank_deficient,
            ambiguous: d.ambiguous,
            mass_err: d.errors.map(|e| e.mass),
            com_err: d.errors.map(|e| e.com),
            inertia_err: d.errors.map(|e| e.inertia),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    fs::write(path, toml::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Ground truth written next to a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthDoc {
    pub configuration: Configuration,
    /// Bounding-box side lengths, m.
    pub extent: [f64; 3],
    pub theta: ThetaFields,
}
