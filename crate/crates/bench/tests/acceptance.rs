//! Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers and runtime.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Rotation3, Vector3, Vector6};
use pmd_bench::sweep::{run_sweep, SweepSpec};
use pmd_bench::trial::{prepare_trial, run_trial};
use pmd_bench::{Motion, TrialSpec};
use pmd_core::discretization::{aggregate, sample_points, Configuration, Fill, PointMassModel, PrimitiveKind, ShapeSpec};
use pmd_core::estimation::{kkt_residual, nnls_solve, normal_equations, pmd_identify, weight, Estimator, PmdConfig};
use pmd_core::metrics::{error_metrics, gravity_dominance, kernel_invariance_check, reduced_rank_diagnostics, MotionStats, ObjectExtent};
use pmd_core::rigid_body::{
    full_regressor, newton_euler_wrench, point_full_regressor, Frame, GravityConvention, InertialParams, KinematicSample,
    ParamVector, Pose, CONSISTENCY_TOL,
};
use pmd_core::signals::{simulate_measurements, NoiseLevel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn stop_and_go() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for configuration in Configuration::ALL {
        let spec = TrialSpec {
            configuration,
            noise: NoiseLevel::None,
            motion: Motion::StopAndGo { holds: 15, samples_per_hold: 10 },
            observations: None,
            estimators: vec![Estimator::Pmd],
            ..Default::default()
        };
        let row = &run_trial(&spec).unwrap().rows[0];
        let com = row.com_err_x.max(row.com_err_y).max(row.com_err_z);
        worst = (worst.0.max(row.mass_err), worst.1.max(com));
        if !row.ok {
            return outcome(false, format!("{configuration}: {}", row.error));
        }
    }
    outcome(worst.0 < 0.1 && worst.1 < 0.1, format!("worst mass {:.2e}%, worst COM axis {:.2e}%", worst.0, worst.1))
}

fn consistency_sweep() -> Outcome {
    let spec = SweepSpec {
        configurations: Configuration::ALL.to_vec(),
        noise_levels: NoiseLevel::ALL.to_vec(),
        speeds: vec![1.0, 1.5, 2.0, 3.0, 4.0],
        seed: 0,
        ..Default::default()
    };
    let result = run_sweep(&spec).unwrap();
    let mut pmd = (0, 0, f64::INFINITY);
    let mut flagged = 0;
    let mut mislabelled = 0;
    for row in &result.rows {
        let theta = ParamVector::from_column_slice(&[row.m, row.mcx, row.mcy, row.mcz, row.jxx, row.jxy, row.jxz, row.jyy, row.jyz, row.jzz]);
        let recomputed = InertialParams::from_vector(&theta, Frame::Body).is_physically_consistent(CONSISTENCY_TOL);
        if row.ok && recomputed != row.consistent {
            mislabelled += 1;
        }
        if row.estimator == Estimator::Pmd {
            pmd.0 += 1;
            if row.ok && row.consistent && row.min_eigenvalue >= -1e-8 {
                pmd.1 += 1;
            }
            pmd.2 = pmd.2.min(row.min_eigenvalue);
        } else if row.ok && !row.consistent {
            flagged += 1;
        }
    }
    outcome(
        result.cells == 160 && pmd.0 == 160 && pmd.1 == 160 && mislabelled == 0,
        format!(
            "{} cells, PMD consistent {}/{} (min eig {:.2e}), OLS/RTLS flagged inconsistent {flagged}, mislabelled {mislabelled}",
            result.cells, pmd.1, pmd.0, pmd.2
        ),
    )
}

fn rank_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = GravityConvention::default();
    let (mut rank4, mut worst_sum, mut worst_moment) = (0, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(5..40);
        let points: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-0.15..0.15))).collect();
        let poses: Vec<Pose> = (0..rng.gen_range(2..10))
            .map(|_| {
                let r = Rotation3::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-3.0..3.0));
                Pose::new(*r.matrix(), Vector3::from_fn(|_, _| rng.gen_range(-0.5..0.5)))
            })
            .collect();
        let d = reduced_rank_diagnostics(&points, &poses, &g).unwrap();
        rank4 += usize::from(d.rank == 4);
        let masses = vec![0.05; n];
        let k = kernel_invariance_check(&d.kernel, &points, &masses).unwrap();
        worst_sum = worst_sum.max(k.max_mass_change);
        worst_moment = worst_moment.max(k.max_moment_change);
    }
    outcome(
        rank4 == 100 && worst_sum < 1e-9 && worst_moment < 1e-9,
        format!("rank 4 in {rank4}/100, max |Σδm| {worst_sum:.1e}, max ‖Pδm‖ {worst_moment:.1e}"),
    )
}

fn enumeration_oracle(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    let mut best = (f64::INFINITY, DVector::zeros(n));
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut x = DVector::zeros(n);
        if !idx.is_empty() {
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
            let rhs = DVector::from_fn(idx.len(), |r, _| g[idx[r]]);
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            if sol.iter().any(|&v| v < 0.0) {
                continue;
            }
            idx.iter().enumerate().for_each(|(k, &i)| x[i] = sol[k]);
        }
        let f = 0.5 * x.dot(&(h * &x)) - g.dot(&x);
        if f < best.0 {
            best = (f, x);
        }
    }
    best.1
}

fn solver_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_x, mut worst_kkt, mut count) = (0.0f64, 0.0f64, 0);
    while count < 50 {
        let n = rng.gen_range(1..=8);
        let rows = n + rng.gen_range(2..12);
        let d = DMatrix::from_fn(rows, n, |_, _| rng.gen_range(-1.0..1.0));
        let t = DVector::from_fn(rows, |_, _| rng.gen_range(-1.0..1.0));
        let lambda = if count % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.5) };
        let (h, g) = normal_equations(&d, &t, lambda).unwrap();
        if h.clone().cholesky().is_none() {
            continue;
        }
        let sol = nnls_solve(&d, &t, lambda).unwrap();
        worst_x = worst_x.max((&sol.x - enumeration_oracle(&h, &g)).amax());
        worst_kkt = worst_kkt.max(kkt_residual(&h, &g, &sol.x));
        count += 1;
    }
    outcome(worst_x < 1e-6 && worst_kkt < 1e-8, format!("50 problems, max |x − oracle| {worst_x:.1e}, max KKT {worst_kkt:.1e}"))
}

fn random_state(rng: &mut ChaCha8Rng) -> KinematicSample {
    let r = Rotation3::from_euler_angles(rng.gen_range(-3.1..3.1), rng.gen_range(-1.5..1.5), rng.gen_range(-3.1..3.1));
    let mut v = |s: f64| Vector3::from_fn(|_, _| rng.gen_range(-s..s));
    KinematicSample { t: 0.0, rotation: *r.matrix(), translation: v(1.0), lin_vel: v(1.0), ang_vel: v(3.0), lin_acc: v(5.0), ang_acc: v(20.0) }
}

fn regressor_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = GravityConvention::default();
    let (mut worst_full, mut worst_points) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let theta = ParamVector::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let s = random_state(&mut rng);
        let lhs: Vector6<f64> = full_regressor(&s, &g).unwrap() * theta;
        let rhs = newton_euler_wrench(&InertialParams::from_vector(&theta, Frame::Body), &s, &g).unwrap().to_vector();
        worst_full = worst_full.max((lhs - rhs).amax() / (1.0 + rhs.amax()));
    }
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let pts: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-0.2..0.2))).collect();
        let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s = random_state(&mut rng);
        let agg = aggregate(&PointMassModel::new(pts.clone(), masses.clone()).unwrap()).unwrap();
        let lhs = point_full_regressor(&pts, &s, &g).unwrap() * DVector::from_vec(masses);
        let rhs = newton_euler_wrench(&agg, &s, &g).unwrap().to_vector();
        let diff = (0..6).map(|i| (lhs[i] - rhs[i]).abs()).fold(0.0, f64::max);
        worst_points = worst_points.max(diff / (1.0 + rhs.amax()));
    }
    outcome(worst_full < 1e-10 && worst_points < 1e-9, format!("max rel. deviation {worst_full:.1e} (θ), {worst_points:.1e} (points)"))
}

fn discretization_convergence() -> Outcome {
    let size = [0.2, 0.1, 0.05];
    let shape = ShapeSpec::single("box", PrimitiveKind::Box { size }, Fill::Density(1.0 / (0.2 * 0.1 * 0.05)));
    let [a, b, c] = size;
    let truth = InertialParams::new(1.0, Vector3::zeros(), [(b * b + c * c) / 12.0, 0.0, 0.0, (a * a + c * c) / 12.0, 0.0, (a * a + b * b) / 12.0], Frame::Body);
    let extent = ObjectExtent::new(size).unwrap();
    let sampled = |d: f64| aggregate(&PointMassModel::uniform(sample_points(&shape, d, 0).unwrap().positions, 1.0)).unwrap();
    let errors: Vec<f64> = [0.01, 0.04, 0.09, 0.25].iter().map(|&d| error_metrics(&sampled(d), &truth, &extent).unwrap().inertia_avg).collect();
    let trend = errors.windows(2).all(|w| w[1] <= w[0] + 2.0);
    let fine = sampled(1.0);
    let diag: Vec<f64> = [0, 3, 5].iter().map(|&k| 100.0 * (fine.inertia[k] - truth.inertia[k]).abs() / truth.inertia[k]).collect();
    outcome(
        trend && diag.iter().all(|&e| e < 5.0),
        format!("errors {:?} %, diagonal at 1 pt/cm³ {:?} %", errors.iter().map(|e| format!("{e:.2}")).collect::<Vec<_>>(), diag.iter().map(|e| format!("{e:.2}")).collect::<Vec<_>>()),
    )
}

fn low_speed_trend() -> Outcome {
    let mut sums = [[0.0f64; 2]; 3];
    let mut n = 0.0;
    for configuration in Configuration::ALL {
        for seed in 0..3 {
            let spec = TrialSpec { configuration, seed, ..Default::default() };
            let result = run_trial(&spec).unwrap();
            for row in &result.rows {
                let i = Estimator::ALL.iter().position(|&e| e == row.estimator).unwrap();
                sums[i][0] += row.com_err;
                sums[i][1] += row.inertia_err;
            }
            n += 1.0;
        }
    }
    let [pmd, ols, rtls] = sums.map(|s| s.map(|v| v / n));
    outcome(
        pmd[0] < ols[0] && pmd[1] < 100.0 && ols[1] > pmd[1],
        format!(
            "COM PMD {:.2}% OLS {:.2}% RTLS {:.2}%; inertia PMD {:.1}% OLS {:.1}% RTLS {:.1}%",
            pmd[0], ols[0], rtls[0], pmd[1], ols[1], rtls[1]
        ),
    )
}

fn weight_schedule() -> Outcome {
    let cfg = PmdConfig::default();
    let at_c1 = weight(cfg.c1, &cfg);
    let at_zero = weight(0.0, &cfg);
    outcome((at_c1 - 3f64.tanh()).abs() < 1e-12 && at_zero == 0.0, format!("w(c1) = {at_c1:.12}, w(0) = {at_zero}"))
}

fn noise_calibration() -> Outcome {
    let params = InertialParams::new(0.3, Vector3::new(0.01, 0.0, 0.02), [1e-3, 0.0, 0.0, 2e-3, 0.0, 1e-3], Frame::Body);
    let g = GravityConvention::default();
    let state = KinematicSample::at_rest(0.0, &Pose::identity());
    let clean = pmd_core::rigid_body::body_wrench(&params, &state, &g).unwrap();
    let states = vec![state; 100_000];
    let mut worst = 0.0f64;
    for level in [NoiseLevel::Low, NoiseLevel::Moderate, NoiseLevel::High] {
        let s = level.sigmas();
        let m = simulate_measurements(&params, &states, &s, &g, 9).unwrap();
        let channels: [(f64, Vec<Vector3<f64>>); 4] = [
            (s.ang_acc, m.iter().map(|x| x.sample.ang_acc).collect()),
            (s.lin_acc, m.iter().map(|x| x.sample.lin_acc).collect()),
            (s.force, m.iter().map(|x| x.wrench.force - clean.force).collect()),
            (s.torque, m.iter().map(|x| x.wrench.torque - clean.torque).collect()),
        ];
        for (target, values) in channels {
            for axis in 0..3 {
                let v: Vec<f64> = values.iter().map(|x| x[axis]).collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
                worst = worst.max((sd / target - 1.0).abs());
            }
        }
    }
    outcome(worst < 0.02, format!("largest relative σ deviation {:.2}% over 36 channels", 100.0 * worst))
}

fn dominance() -> Outcome {
    let d = gravity_dominance(&MotionStats::default());
    outcome((4.0..=6.0).contains(&d.ratio), format!("ratio {:.2} (force {:.2}, torque {:.2})", d.ratio, d.force_ratio, d.torque_ratio))
}

fn solve_latency() -> Outcome {
    let spec = TrialSpec { configuration: Configuration::Hammer, ..Default::default() };
    let data = prepare_trial(&spec).unwrap();
    let start = Instant::now();
    let report = pmd_identify(&data.batch, &data.points, &spec.pmd, &spec.gravity).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        data.points.len() == 56 && data.batch.len() == 150 && elapsed < 1.0,
        format!("n = {}, M = {}, {:.1} ms ({} iterations)", data.points.len(), data.batch.len(), 1e3 * elapsed, report.iterations),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("stop-and-go exactness", Duration::from_secs(10), stop_and_go),
        ("PMD physical consistency over 160 cells", Duration::from_secs(600), consistency_sweep),
        ("reduced-model rank and kernel", Duration::from_secs(30), rank_property),
        ("NNLS vs enumeration oracle", Duration::from_secs(10), solver_oracle),
        ("regressor identities", Duration::from_secs(5), regressor_identity),
        ("discretization convergence", Duration::from_secs(10), discretization_convergence),
        ("low-speed superiority trend", Duration::from_secs(300), low_speed_trend),
        ("weight schedule values", Duration::from_secs(1), weight_schedule),
        ("noise calibration", Duration::from_secs(10), noise_calibration),
        ("gravity dominance", Duration::from_secs(1), dominance),
        ("PMD solve latency", Duration::from_secs(1), solve_latency),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {}: {} | {} | {:.2} s (limit {} s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
