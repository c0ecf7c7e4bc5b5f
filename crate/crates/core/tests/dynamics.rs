//! Regressor identities against an independent point-mass Newton-Euler oracle.

use nalgebra::{Rotation3, Vector3, Vector6};
use pmd_core::discretization::{aggregate, PointMassModel};
use pmd_core::rigid_body::{
    body_wrench, full_regressor, newton_euler_wrench, point_full_regressor, Frame, GravityConvention, InertialParams,
    KinematicSample, ParamVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(rng: &mut ChaCha8Rng) -> KinematicSample {
    let v3 = |rng: &mut ChaCha8Rng, s: f64| Vector3::from_fn(|_, _| rng.gen_range(-s..s));
    let r = Rotation3::from_euler_angles(rng.gen_range(-3.1..3.1), rng.gen_range(-1.5..1.5), rng.gen_range(-3.1..3.1));
    KinematicSample {
        t: 0.0,
        rotation: *r.matrix(),
        translation: v3(rng, 1.0),
        lin_vel: v3(rng, 1.0),
        ang_vel: v3(rng, 3.0),
        lin_acc: v3(rng, 5.0),
        ang_acc: v3(rng, 20.0),
    }
}

fn random_cloud(rng: &mut ChaCha8Rng) -> (Vec<Vector3<f64>>, Vec<f64>) {
    let n = rng.gen_range(1..8);
    let pts = (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-0.2..0.2))).collect();
    let masses = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    (pts, masses)
}

/// World wrench about the world origin needed to move a cloud of particles rigidly.
fn particle_oracle(pts: &[Vector3<f64>], masses: &[f64], s: &KinematicSample, g: &Vector3<f64>) -> Vector6<f64> {
    let mut f = Vector3::zeros();
    let mut tau = Vector3::zeros();
    for (p, &m) in pts.iter().zip(masses) {
        let r = s.rotation * p;
        let acc = s.lin_acc + s.ang_acc.cross(&r) + s.ang_vel.cross(&s.ang_vel.cross(&r));
        let fi = (acc - g) * m;
        f += fi;
        tau += (s.translation + r).cross(&fi);
    }
    Vector6::new(f.x, f.y, f.z, tau.x, tau.y, tau.z)
}

#[test]
fn newton_euler_matches_particle_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let gravity = GravityConvention::default();
    for _ in 0..1000 {
        let (pts, masses) = random_cloud(&mut rng);
        let s = random_state(&mut rng);
        let theta = aggregate(&PointMassModel::new(pts.clone(), masses.clone()).unwrap()).unwrap();
        let w = newton_euler_wrench(&theta, &s, &gravity).unwrap().to_vector();
        let oracle = particle_oracle(&pts, &masses, &s, &gravity.g);
        assert!((w - oracle).amax() < 1e-9 * (1.0 + oracle.amax()), "{:?}", w - oracle);
    }
}

#[test]
fn full_regressor_times_theta_is_newton_euler() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let gravity = GravityConvention::default();
    for _ in 0..1000 {
        let theta = ParamVector::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let p = InertialParams::from_vector(&theta, Frame::Body);
        let s = random_state(&mut rng);
        let lhs = full_regressor(&s, &gravity).unwrap() * theta;
        let rhs = newton_euler_wrench(&p, &s, &gravity).unwrap().to_vector();
        assert!((lhs - rhs).amax() < 1e-10 * (1.0 + rhs.amax()));
    }
}

#[test]
fn point_regressor_times_masses_is_aggregate_wrench() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let gravity = GravityConvention::default();
    for _ in 0..1000 {
        let (pts, masses) = random_cloud(&mut rng);
        let s = random_state(&mut rng);
        let theta = aggregate(&PointMassModel::new(pts.clone(), masses.clone()).unwrap()).unwrap();
        let m = nalgebra::DVector::from_column_slice(&masses);
        let lhs = point_full_regressor(&pts, &s, &gravity).unwrap() * m;
        let rhs = newton_euler_wrench(&theta, &s, &gravity).unwrap().to_vector();
        assert!((lhs - nalgebra::DVector::from_column_slice(rhs.as_slice())).amax() < 1e-9 * (1.0 + rhs.amax()));
    }
}

#[test]
fn body_and_world_wrenches_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let gravity = GravityConvention::default();
    for _ in 0..200 {
        let (pts, masses) = random_cloud(&mut rng);
        let s = random_state(&mut rng);
        let theta = aggregate(&PointMassModel::new(pts, masses).unwrap()).unwrap();
        let body = body_wrench(&theta, &s, &gravity).unwrap();
        let world = newton_euler_wrench(&theta, &s, &gravity).unwrap();
        let back = body.transformed(&s.pose(), Frame::World);
        assert!((back.to_vector() - world.to_vector()).amax() < 1e-12 * (1.0 + world.to_vector().amax()));
    }
}
