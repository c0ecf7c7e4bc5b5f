use nalgebra::Vector3;
use pmd_core::discretization::{
    aggregate, build_test_object, sample_points, Configuration, Fill, PointMassModel, PrimitiveKind, ShapeSpec,
    TestObjectConfig,
};
use pmd_core::metrics::{error_metrics, ObjectExtent};
use pmd_core::rigid_body::{Frame, InertialParams};

const SIZE: [f64; 3] = [0.2, 0.1, 0.05];

fn solid_box() -> ShapeSpec {
    let volume: f64 = SIZE.iter().product();
    ShapeSpec::single("box", PrimitiveKind::Box { size: SIZE }, Fill::Density(1.0 / volume))
}

/// `m/12·(b²+c², a²+c², a²+b²)` for a centred 1 kg box.
fn analytic_box() -> InertialParams {
    let [a, b, c] = SIZE;
    InertialParams::new(1.0, Vector3::zeros(), [(b * b + c * c) / 12.0, 0.0, 0.0, (a * a + c * c) / 12.0, 0.0, (a * a + b * b) / 12.0], Frame::Body)
}

fn sampled_box(density: f64) -> InertialParams {
    let pts = sample_points(&solid_box(), density, 0).unwrap().positions;
    aggregate(&PointMassModel::uniform(pts, 1.0)).unwrap()
}

#[test]
fn inertia_error_shrinks_with_density() {
    let truth = analytic_box();
    let extent = ObjectExtent::new(SIZE).unwrap();
    let errors: Vec<f64> = [0.01, 0.04, 0.09, 0.25]
        .iter()
        .map(|&d| error_metrics(&sampled_box(d), &truth, &extent).unwrap().inertia_avg)
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] + 2.0, "{errors:?}");
    }
    assert!(errors[3] < errors[0], "{errors:?}");

    let fine = sampled_box(1.0);
    for k in [0, 3, 5] {
        let rel = (fine.inertia[k] - truth.inertia[k]).abs() / truth.inertia[k];
        assert!(rel < 0.05, "entry {k}: {rel}");
    }
}

#[test]
fn sampling_is_deterministic_and_inside() {
    for c in Configuration::ALL {
        let shape = build_test_object(&TestObjectConfig::new(c)).unwrap().shape;
        for seed in 0..3 {
            let a = sample_points(&shape, 0.09, seed).unwrap();
            let b = sample_points(&shape, 0.09, seed).unwrap();
            assert_eq!(a, b);
            assert!(a.positions.iter().all(|p| shape.contains(p)));
        }
    }
}

fn golden() -> Vec<(String, f64)> {
    include_str!("data/hammer_truth.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.trim().to_string(), v.trim().parse().unwrap())
        })
        .collect()
}

#[test]
fn hammer_ground_truth_matches_golden_file() {
    let truth = build_test_object(&TestObjectConfig::new(Configuration::Hammer)).unwrap().truth.to_vector();
    let names = ["m", "mcx", "mcy", "mcz", "jxx", "jxy", "jxz", "jyy", "jyz", "jzz"];
    let g = golden();
    assert_eq!(g.len(), 10);
    for (i, (name, value)) in g.iter().enumerate() {
        assert_eq!(name, names[i]);
        assert!((truth[i] - value).abs() <= 1e-12 * value.abs().max(1e-6), "{name}: {} vs {value}", truth[i]);
    }
}
