use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use pmd_core::discretization::{sample_points, Configuration, ShapeSpec};
use pmd_core::estimation::Estimator;
use pmd_core::metrics::{error_metrics, ObjectExtent};
use pmd_core::signals::NoiseLevel;
use pmd_bench::diagnose::diagnose;
use pmd_bench::io::{
    parse_filter, read_dataset, read_points, read_toml, write_dataset, write_points, write_report_csv, write_toml,
    Dataset, DatasetMeta, ReportDoc, ThetaFields, TruthDoc,
};
use pmd_bench::predict::{predict_wrench, prediction_csv};
use pmd_bench::sweep::{run_sweep, summarize, write_sweep, SweepSpec};
use pmd_bench::trial::{estimation_batch, prepare_trial, run_estimator, FilterMode, Motion};

#[derive(Parser)]
#[command(name = "pmd-bench", version, about = "Inertial parameter identification: simulation, estimation and benchmarks")]
struct Cli {
    /// TOML document with trial settings under `[trial]` and sweep axes at the top level.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trial and write its measurement stream, candidate points and ground truth.
    Simulate(SimulateArgs),
    /// Run estimators on a dataset file.
    Identify(IdentifyArgs),
    /// Run a parameter sweep and write result tables.
    Benchmark(BenchmarkArgs),
    /// Excitation, conditioning and observability report for a dataset.
    Diagnose(DiagnoseArgs),
    /// Compare wrenches predicted by an estimate with those of the true body.
    Predict(PredictArgs),
}

/// Overrides of the trial settings.
#[derive(Args, Default)]
struct TrialArgs {
    /// Object configuration (hammer, barbell, tee, uniform, corners, rod, halfnhalf, empty).
    #[arg(long)]
    object: Option<Configuration>,
    #[arg(long)]
    noise: Option<NoiseLevel>,
    /// Target average angular speed, rad/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Timesteps handed to the estimators.
    #[arg(long)]
    observations: Option<usize>,
    /// Candidate points per cubic centimetre.
    #[arg(long)]
    density: Option<f64>,
    /// Filter kinematics before estimation: auto, on or off.
    #[arg(long, value_parser = parse_filter)]
    filter: Option<FilterMode>,
    /// Stop-and-go motion as HOLDS:SAMPLES_PER_HOLD.
    #[arg(long, value_parser = parse_stop_and_go)]
    stop_and_go: Option<Motion>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated estimators (pmd, ols, rtls).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<Estimator>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    trial: TrialArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Candidate point CSV to write.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Ground-truth TOML to write.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct PointSource {
    /// Candidate point CSV (x,y,z,mass).
    #[arg(long, conflicts_with = "shape")]
    points: Option<PathBuf>,
    /// Shape TOML to sample candidate points from, at the trial density.
    #[arg(long)]
    shape: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    trial: TrialArgs,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    source: PointSource,
    /// Seed for shape sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Ground truth, for error metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Directory for report.csv, report_<estimator>.toml and estimated point masses.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    trial: TrialArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[arg(long, value_delimiter = ',')]
    objects: Option<Vec<Configuration>>,
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<NoiseLevel>>,
    #[arg(long, value_delimiter = ',')]
    speeds: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    c1_values: Option<Vec<f64>>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Extra shorter windows evaluated on each stream.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    trial: TrialArgs,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    source: PointSource,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    /// Estimate report TOML.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Long-format series CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_stop_and_go(s: &str) -> anyhow::Result<Motion> {
    let (h, k) = s.split_once(':').context("expected HOLDS:SAMPLES_PER_HOLD")?;
    Ok(Motion::StopAndGo { holds: h.parse()?, samples_per_hold: k.parse()? })
}

fn load_config(path: Option<&Path>) -> anyhow::Result<SweepSpec> {
    match path {
        Some(p) => read_toml(p),
        None => Ok(SweepSpec::default()),
    }
}

impl TrialArgs {
    fn apply(&self, spec: &mut pmd_bench::TrialSpec) {
        if let Some(v) = self.object {
            spec.configuration = v;
        }
        if let Some(v) = self.noise {
            spec.noise = v;
        }
        if let Some(v) = self.speed {
            spec.target_speed = Some(v);
        }
        if let Some(v) = self.observations {
            spec.observations = Some(v);
        }
        if let Some(v) = self.density {
            spec.density = v;
        }
        if let Some(v) = self.filter {
            spec.filter = v;
        }
        if let Some(v) = self.stop_and_go {
            spec.motion = v;
        }
        if let Some(v) = self.c1 {
            spec.pmd.c1 = v;
        }
        if let Some(v) = self.lambda {
            spec.pmd.lambda = v;
        }
        if let Some(v) = &self.estimators {
            spec.estimators = v.clone();
        }
    }
}

fn load_points(source: &PointSource, spec: &pmd_bench::TrialSpec) -> anyhow::Result<(Vec<Vector3<f64>>, Vec<f64>)> {
    match (&source.points, &source.shape) {
        (Some(p), _) => read_points(p),
        (None, Some(s)) => {
            let shape: ShapeSpec = read_toml(s)?;
            let pts = sample_points(&shape, spec.density, spec.seed)?.positions;
            let n = pts.len();
            Ok((pts, vec![0.0; n]))
        }
        (None, None) => bail!("either --points or --shape is required"),
    }
}

fn simulate(cfg: SweepSpec, args: SimulateArgs) -> anyhow::Result<()> {
    let mut spec = cfg.base;
    args.trial.apply(&mut spec);
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let data = prepare_trial(&spec)?;
    let mut measurements = data.measurements;
    if let Some(n) = spec.observations {
        measurements.truncate(n);
    }
    let meta = DatasetMeta { noise: spec.noise, filter: spec.filter, gravity: spec.gravity, ..Default::default() };
    write_dataset(&args.out, &Dataset { meta, measurements })?;
    if let Some(p) = &args.points {
        write_points(p, &data.points, &vec![0.0; data.points.len()])?;
    }
    if let Some(p) = &args.truth {
        let e = data.object.extent;
        write_toml(p, &TruthDoc { configuration: spec.configuration, extent: [e.x, e.y, e.z], theta: ThetaFields::from(&data.object.truth) })?;
    }
    eprintln!(
        "{}: {} samples, {} candidate points, mean |ω| {:.3} rad/s",
        spec.configuration,
        data.batch.len(),
        data.points.len(),
        data.avg_ang_speed
    );
    Ok(())
}

fn identify(cfg: SweepSpec, args: IdentifyArgs) -> anyhow::Result<()> {
    let mut spec = cfg.base;
    args.trial.apply(&mut spec);
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let ds = read_dataset(&args.data)?;
    spec.gravity = ds.meta.gravity;
    let filter = args.trial.filter.unwrap_or(ds.meta.filter);
    let batch = estimation_batch(&ds.measurements, ds.meta.noise, filter)?;
    let batch = match args.trial.observations {
        Some(n) => batch.truncated(n),
        None => batch,
    };
    let (points, _) = load_points(&args.source, &spec)?;
    let truth: Option<TruthDoc> = args.truth.as_deref().map(read_toml).transpose()?;

    let mut docs = Vec::new();
    for &estimator in &spec.estimators {
        let report = match run_estimator(estimator, &batch, &points, &spec) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{estimator}: failed: {e}");
                continue;
            }
        };
        let errors = match &truth {
            Some(t) => Some(error_metrics(&report.theta, &t.theta.to_params(), &ObjectExtent::new(t.extent)?)?),
            None => None,
        };
        let doc = ReportDoc::new(&report, errors.as_ref());
        match &args.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                write_toml(&dir.join(format!("report_{estimator}.toml")), &doc)?;
                if let Some(m) = &report.masses {
                    write_points(&dir.join(format!("points_{estimator}.csv")), &points, m)?;
                }
            }
            None => println!("{}", toml::to_string_pretty(&doc)?),
        }
        docs.push(doc);
    }
    if let Some(dir) = &args.out_dir {
        write_report_csv(&dir.join("report.csv"), &docs)?;
    }
    if docs.is_empty() {
        bail!("every estimator failed");
    }
    Ok(())
}

fn benchmark(mut cfg: SweepSpec, args: BenchmarkArgs) -> anyhow::Result<()> {
    args.trial.apply(&mut cfg.base);
    cfg.seed = args.seed;
    if let Some(v) = args.objects {
        cfg.configurations = v;
    }
    if let Some(v) = args.noise_levels {
        cfg.noise_levels = v;
    }
    if let Some(v) = args.speeds {
        cfg.speeds = v;
    }
    if let Some(v) = args.densities {
        cfg.densities = v;
    }
    if let Some(v) = args.c1_values {
        cfg.c1_values = v;
    }
    if let Some(v) = args.repetitions {
        cfg.repetitions = v;
    }
    if let Some(v) = args.checkpoints {
        cfg.base.checkpoints = v;
    }
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let result = run_sweep(&cfg)?;
    write_sweep(&args.out_dir, &cfg, &result)?;
    let summary = summarize(&cfg, &result);
    eprintln!("{} cells, {} rows, {} failed cells -> {}", summary.cells, summary.rows, summary.failed_cells, args.out_dir.display());
    for e in &summary.estimators {
        eprintln!(
            "{:>5}: mass {:8.3}%  com {:8.3}%  inertia {:9.3}%  consistent {:5.1}%  {:.4} s",
            e.estimator.to_string(),
            e.mean_mass_err,
            e.mean_com_err,
            e.mean_inertia_err,
            100.0 * e.consistent_rate,
            e.mean_wall_time
        );
    }
    Ok(())
}

fn diagnose_cmd(cfg: SweepSpec, args: DiagnoseArgs) -> anyhow::Result<()> {
    let mut spec = cfg.base;
    args.trial.apply(&mut spec);
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let ds = read_dataset(&args.data)?;
    let batch = estimation_batch(&ds.measurements, ds.meta.noise, args.trial.filter.unwrap_or(ds.meta.filter))?;
    let (points, masses) = load_points(&args.source, &spec)?;
    let report = diagnose(&batch, &points, &masses, &spec.pmd, &ds.meta.gravity)?;
    println!("{}", toml::to_string_pretty(&report)?);
    Ok(())
}

fn predict(args: PredictArgs) -> anyhow::Result<()> {
    let ds = read_dataset(&args.data)?;
    let report: ReportDoc = read_toml(&args.report)?;
    let truth: TruthDoc = read_toml(&args.truth)?;
    let samples: Vec<_> = ds.measurements.iter().map(|m| m.sample).collect();
    let p = predict_wrench(&report.theta.to_params(), &truth.theta.to_params(), &samples, &ds.meta.gravity)?;
    if let Some(out) = &args.out {
        std::fs::write(out, prediction_csv(&p)?).with_context(|| format!("writing {}", out.display()))?;
    }
    #[derive(serde::Serialize)]
    struct Summary {
        rmse: [f64; 6],
        reference_rms: [f64; 6],
        force_relative_rmse: f64,
        torque_relative_rmse: f64,
    }
    let s = Summary {
        rmse: p.rmse,
        reference_rms: p.reference_rms,
        force_relative_rmse: p.force_relative_rmse(),
        torque_relative_rmse: p.torque_relative_rmse(),
    };
    println!("{}", toml::to_string_pretty(&s)?);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(cfg, a),
        Command::Identify(a) => identify(cfg, a),
        Command::Benchmark(a) => benchmark(cfg, a),
        Command::Diagnose(a) => diagnose_cmd(cfg, a),
        Command::Predict(a) => predict(a),
    }
}

