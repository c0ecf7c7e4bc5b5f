//! Cartesian sweeps over trial axes, run in parallel across cells, plus the tables they emit.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use pmd_core::discretization::Configuration;
use pmd_core::estimation::Estimator;
use pmd_core::signals::NoiseLevel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::trial::{run_trial_cell, TrialRow, TrialSpec};

pub const RESULTS_VERSION: u32 = 1;

/// Grid over [`TrialSpec`] axes. An empty axis keeps the base spec's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    /// Settings shared by every cell; also the spec of single-trial commands.
    #[serde(rename = "trial")]
    pub base: TrialSpec,
    pub configurations: Vec<Configuration>,
    pub noise_levels: Vec<NoiseLevel>,
    /// Target average angular speeds, rad/s.
    pub speeds: Vec<f64>,
    /// Points per cubic centimetre.
    pub densities: Vec<f64>,
    pub c1_values: Vec<f64>,
    pub repetitions: usize,
    /// Repetition `r` runs with seed `seed + r`, so every cell of one repetition shares it.
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            base: TrialSpec::default(),
            configurations: Configuration::ALL.to_vec(),
            noise_levels: Vec::new(),
            speeds: Vec::new(),
            densities: Vec::new(),
            c1_values: Vec::new(),
            repetitions: 1,
            seed: 0,
        }
    }
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl SweepSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.repetitions > 0, "repetitions must be positive");
        self.base.validate()
    }

    /// All cells in a fixed order: configuration, noise, speed, density, c1, repetition.
    pub fn cells(&self) -> Vec<TrialSpec> {
        let base_speed = self.base.target_speed;
        let mut cells = Vec::new();
        for &configuration in &axis(&self.configurations, self.base.configuration) {
            for &noise in &axis(&self.noise_levels, self.base.noise) {
                let speeds: Vec<Option<f64>> = if self.speeds.is_empty() { vec![base_speed] } else { self.speeds.iter().map(|&s| Some(s)).collect() };
                for &target_speed in &speeds {
                    for &density in &axis(&self.densities, self.base.density) {
                        for &c1 in &axis(&self.c1_values, self.base.pmd.c1) {
                            for rep in 0..self.repetitions {
                                let mut spec = self.base.clone();
                                spec.configuration = configuration;
                                spec.noise = noise;
                                spec.target_speed = target_speed;
                                spec.density = density;
                                spec.pmd.c1 = c1;
                                spec.seed = self.seed.wrapping_add(rep as u64);
                                cells.push(spec);
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Ordered by cell id, then window, then estimator.
    pub rows: Vec<TrialRow>,
    pub cells: usize,
    /// Cells whose data could not be generated, with the reason.
    pub failed_cells: Vec<(usize, String)>,
}

pub fn run_sweep(spec: &SweepSpec) -> anyhow::Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let per_cell: Vec<(Vec<TrialRow>, Option<String>)> = cells
        .par_iter()
        .enumerate()
        .map(|(id, cell)| match run_trial_cell(cell, id) {
            Ok(r) => (r.rows, None),
            Err(e) => {
                let msg = format!("{e:#}");
                let rows = cell
                    .estimators
                    .iter()
                    .map(|&est| TrialRow { error: msg.clone(), ..TrialRow::blank(id, cell, est) })
                    .collect();
                (rows, Some(msg))
            }
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed_cells = Vec::new();
    for (id, (r, err)) in per_cell.into_iter().enumerate() {
        rows.extend(r);
        if let Some(e) = err {
            failed_cells.push((id, e));
        }
    }
    Ok(SweepResult { rows, cells: cells.len(), failed_cells })
}

#[derive(Debug, Clone, Default)]
struct Acc {
    values: Vec<f64>,
}

impl Acc {
    fn push(&mut self, v: f64) {
        if v.is_finite() {
            self.values.push(v);
        }
    }

    fn mean(&self) -> f64 {
        if self.values.is_empty() {
            f64::NAN
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }

    fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

const METRICS: [&str; 6] = ["mass_err", "com_err", "inertia_err", "wall_time", "consistent", "condition_number"];

fn metric(row: &TrialRow, name: &str) -> f64 {
    match name {
        "mass_err" => row.mass_err,
        "com_err" => row.com_err,
        "inertia_err" => row.inertia_err,
        "wall_time" => row.wall_time,
        "consistent" => f64::from(u8::from(row.consistent)),
        "condition_number" => row.condition_number,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Long-format table: one line per (key, estimator, metric) with mean, standard deviation and
/// sample count. Failed rows contribute nothing. Groups keep first-appearance order.
fn long_table<'a>(rows: impl Iterator<Item = &'a TrialRow>, key_names: &[&str], key: impl Fn(&TrialRow) -> Vec<String>) -> anyhow::Result<String> {
    let mut order: Vec<(Vec<String>, Estimator)> = Vec::new();
    let mut groups: HashMap<(Vec<String>, Estimator), Vec<Acc>> = HashMap::new();
    for row in rows {
        let k = (key(row), row.estimator);
        let accs = groups.entry(k.clone()).or_insert_with(|| {
            order.push(k);
            vec![Acc::default(); METRICS.len()]
        });
        if row.ok {
            for (acc, name) in accs.iter_mut().zip(METRICS) {
                acc.push(metric(row, name));
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = key_names.to_vec();
    header.extend(["estimator", "metric", "mean", "std", "n"]);
    w.write_record(&header)?;
    for k in &order {
        for (acc, name) in groups[k].iter().zip(METRICS) {
            let mut rec = k.0.clone();
            rec.extend([k.1.to_string(), name.to_string(), acc.mean().to_string(), acc.std().to_string(), acc.values.len().to_string()]);
            w.write_record(&rec)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Rows of the longest window of each cell, i.e. without checkpoint prefixes.
fn final_windows(rows: &[TrialRow]) -> impl Iterator<Item = &TrialRow> {
    let mut longest: HashMap<usize, usize> = HashMap::new();
    for r in rows {
        let e = longest.entry(r.cell).or_default();
        *e = (*e).max(r.observations);
    }
    rows.iter().filter(move |r| r.observations == longest[&r.cell])
}

pub fn results_csv(spec: &SweepSpec, result: &SweepResult) -> anyhow::Result<String> {
    let mut out = format!("# pmd-bench results v{RESULTS_VERSION} seed={} cells={}\n", spec.seed, result.cells);
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &result.rows {
        w.serialize(r)?;
    }
    out.push_str(std::str::from_utf8(&w.into_inner()?)?);
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub runs: usize,
    pub failures: usize,
    pub consistent_rate: f64,
    /// Most negative pseudo-inertia eigenvalue seen.
    pub worst_min_eigenvalue: f64,
    pub mean_mass_err: f64,
    pub mean_com_err: f64,
    pub mean_inertia_err: f64,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: u32,
    pub seed: u64,
    pub cells: usize,
    pub rows: usize,
    pub failed_cells: usize,
    pub estimators: Vec<EstimatorSummary>,
}

pub fn summarize(spec: &SweepSpec, result: &SweepResult) -> SweepSummary {
    let finals: Vec<&TrialRow> = final_windows(&result.rows).collect();
    let estimators = spec
        .base
        .estimators
        .iter()
        .map(|&estimator| {
            let rows: Vec<&&TrialRow> = finals.iter().filter(|r| r.estimator == estimator).collect();
            let ok: Vec<&&TrialRow> = rows.iter().copied().filter(|r| r.ok).collect();
            let mean = |f: fn(&TrialRow) -> f64| {
                let mut a = Acc::default();
                ok.iter().for_each(|r| a.push(f(r)));
                a.mean()
            };
            EstimatorSummary {
                estimator,
                runs: rows.len(),
                failures: rows.len() - ok.len(),
                consistent_rate: if ok.is_empty() { f64::NAN } else { ok.iter().filter(|r| r.consistent).count() as f64 / ok.len() as f64 },
                worst_min_eigenvalue: ok.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min),
                mean_mass_err: mean(|r| r.mass_err),
                mean_com_err: mean(|r| r.com_err),
                mean_inertia_err: mean(|r| r.inertia_err),
                mean_wall_time: mean(|r| r.wall_time),
            }
        })
        .collect();
    SweepSummary {
        version: RESULTS_VERSION,
        seed: spec.seed,
        cells: result.cells,
        rows: result.rows.len(),
        failed_cells: result.failed_cells.len(),
        estimators,
    }
}

/// Writes `results.csv`, the four figure series and `summary.toml` into `dir`.
pub fn write_sweep(dir: &Path, spec: &SweepSpec, result: &SweepResult) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, text: String| fs::write(dir.join(name), text).with_context(|| format!("writing {name}"));
    write("results.csv", results_csv(spec, result)?)?;
    let rows = &result.rows;
    write("fig4_density.csv", long_table(final_windows(rows), &["density", "points"], |r| vec![r.density.to_string(), r.points.to_string()])?)?;
    write("fig5_c1.csv", long_table(final_windows(rows), &["c1", "target_speed"], |r| vec![r.c1.to_string(), r.target_speed.to_string()])?)?;
    write(
        "fig6_noise_speed.csv",
        long_table(final_windows(rows), &["noise", "target_speed"], |r| vec![r.noise.to_string(), r.target_speed.to_string()])?,
    )?;
    write(
        "fig7_error_time.csv",
        long_table(rows.iter(), &["noise", "target_speed", "window"], |r| {
            vec![r.noise.to_string(), r.target_speed.to_string(), r.window.to_string()]
        })?,
    )?;
    write("summary.toml", toml::to_string_pretty(&summarize(spec, result))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::run_trial;

    fn small() -> SweepSpec {
        SweepSpec {
            base: TrialSpec { observations: Some(100), checkpoints: vec![50], ..Default::default() },
            configurations: vec![Configuration::Tee, Configuration::Rod],
            noise_levels: vec![NoiseLevel::None, NoiseLevel::High],
            speeds: vec![1.0, 2.0],
            ..Default::default()
        }
    }

    #[test]
    fn grid_size_and_order() {
        let cells = small().cells();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].configuration, Configuration::Tee);
        assert_eq!(cells[0].noise, NoiseLevel::None);
        assert_eq!(cells[1].target_speed, Some(2.0));
        assert_eq!(cells[7].configuration, Configuration::Rod);
        let reps = SweepSpec { repetitions: 3, seed: 10, ..small() }.cells();
        assert_eq!(reps.len(), 24);
        assert_eq!(reps.iter().take(3).map(|c| c.seed).collect::<Vec<_>>(), vec![10, 11, 12]);
    }

    #[test]
    fn single_cell_equals_run_trial() {
        let spec = SweepSpec { configurations: vec![Configuration::Hammer], ..Default::default() };
        let sweep = run_sweep(&spec).unwrap();
        let trial = run_trial(&spec.cells()[0]).unwrap();
        let strip = |rows: &[TrialRow]| rows.iter().map(|r| TrialRow { wall_time: 0.0, ..r.clone() }).collect::<Vec<_>>();
        assert_eq!(format!("{:?}", strip(&sweep.rows)), format!("{:?}", strip(&trial.rows)));
    }

    #[test]
    fn outputs_are_reproducible_and_complete() {
        let spec = small();
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        let strip = |r: &SweepResult| {
            let rows: Vec<TrialRow> = r.rows.iter().map(|r| TrialRow { wall_time: 0.0, ..r.clone() }).collect();
            results_csv(&spec, &SweepResult { rows, cells: r.cells, failed_cells: vec![] }).unwrap()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.rows.len(), 8 * 2 * 3);
        assert!(a.rows.windows(2).all(|w| w[0].cell <= w[1].cell));

        let dir = tempfile::tempdir().unwrap();
        write_sweep(dir.path(), &spec, &a).unwrap();
        let master = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(master.starts_with("# pmd-bench results v1 seed=0 cells=8\n"));
        let fig6 = fs::read_to_string(dir.path().join("fig6_noise_speed.csv")).unwrap();
        assert_eq!(fig6.lines().next().unwrap(), "noise,target_speed,estimator,metric,mean,std,n");
        // 2 noise × 2 speeds × 3 estimators × 6 metrics
        assert_eq!(fig6.lines().count(), 1 + 2 * 2 * 3 * METRICS.len());
        let fig7 = fs::read_to_string(dir.path().join("fig7_error_time.csv")).unwrap();
        assert!(fig7.lines().any(|l| l.starts_with("none,1,0.5,pmd,")));
        let summary: SweepSummary = toml::from_str(&fs::read_to_string(dir.path().join("summary.toml")).unwrap()).unwrap();
        assert_eq!(summary.cells, 8);
        assert_eq!(summary.estimators[0].runs, 8);
        assert_eq!(summary.estimators[0].consistent_rate, 1.0);
    }

    #[test]
    fn failed_cells_do_not_abort() {
        let mut spec = small();
        spec.configurations = vec![Configuration::Tee];
        spec.noise_levels = vec![NoiseLevel::None];
        spec.speeds = vec![1.0];
        spec.densities = vec![0.04, -1.0];
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.cells, 2);
        assert!(out.rows.iter().filter(|r| r.cell == 0).all(|r| r.ok));
        assert_eq!(out.failed_cells.len(), 1);
        assert!(out.rows.iter().filter(|r| r.cell == 1).all(|r| !r.ok && !r.error.is_empty()));
    }
}
