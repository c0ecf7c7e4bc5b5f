//! Rank and kernel of the gravity-only torque model of a point set.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimation::aggregate_masses;
use crate::rigid_body::{reduced_regressor, GravityConvention, Pose};

/// Singular values at or below `RANK_TOL·σmax` count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RankDiagnostics {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Orthonormal kernel basis, one column per vector.
    pub kernel: DMatrix<f64>,
    /// The points lie in a common plane.
    pub coplanar: bool,
}

/// Stacked torque rows of the reduced model over `poses`, with rank and kernel.
pub fn reduced_rank_diagnostics(
    points: &[Vector3<f64>],
    poses: &[Pose],
    gravity: &GravityConvention,
) -> Result<RankDiagnostics> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if poses.is_empty() {
        return Err(invalid("at least one pose is required"));
    }
    let n = points.len();
    let rows = (3 * poses.len()).max(n);
    let mut a = DMatrix::zeros(rows, n);
    for (k, pose) in poses.iter().enumerate() {
        let r = reduced_regressor(points, pose, gravity)?;
        a.view_mut((3 * k, 0), (3, n)).copy_from(&r.view((3, 0), (3, n)));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let tol = RANK_TOL * smax;
    let kernel_rows: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= tol).collect();
    let rank = n - kernel_rows.len();
    let kernel = DMatrix::from_fn(n, kernel_rows.len(), |r, c| v_t[(kernel_rows[c], r)]);
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));

    let homogeneous = DMatrix::from_fn(4, n, |r, c| if r < 3 { points[c][r] } else { 1.0 });
    let hs = homogeneous.singular_values();
    let affine_rank = hs.iter().filter(|&&s| s > RANK_TOL * hs.max()).count();
    Ok(RankDiagnostics { rank, singular_values, kernel, coplanar: affine_rank < 4 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub dimension: usize,
    /// `max |Σδm|` over the basis.
    pub max_mass_change: f64,
    /// `max ‖P·δm‖` over the basis.
    pub max_moment_change: f64,
    /// Largest change of any inertia entry after the largest admissible step along a basis
    /// vector.
    pub max_inertia_change: f64,
    /// Largest change of total mass or first moment after the same steps.
    pub max_aggregate_change: f64,
}

impl KernelReport {
    /// Mass and first moment are conserved within `tol`.
    pub fn conserves(&self, tol: f64) -> bool {
        self.max_mass_change < tol && self.max_moment_change < tol && self.max_aggregate_change < tol
    }
}

/// Checks that reduced-model kernel directions leave mass and first moment unchanged while
/// moving the inertia tensor. Each direction is applied with the largest step (halved) that
/// keeps `masses` non-negative.
pub fn kernel_invariance_check(kernel: &DMatrix<f64>, points: &[Vector3<f64>], masses: &[f64]) -> Result<KernelReport> {
    let n = points.len();
    if kernel.nrows() != n || masses.len() != n {
        return Err(invalid("kernel, points and masses disagree in size"));
    }
    let base = aggregate_masses(points, &DVector::from_column_slice(masses));
    let mut report = KernelReport {
        dimension: kernel.ncols(),
        max_mass_change: 0.0,
        max_moment_change: 0.0,
        max_inertia_change: 0.0,
        max_aggregate_change: 0.0,
    };
    for dm in kernel.column_iter() {
        let sum: f64 = dm.sum();
        let moment: Vector3<f64> = points.iter().zip(dm.iter()).map(|(p, &d)| p * d).sum();
        report.max_mass_change = report.max_mass_change.max(sum.abs());
        report.max_moment_change = report.max_moment_change.max(moment.norm());

        let eps = 0.5
            * masses
                .iter()
                .zip(dm.iter())
                .filter(|(_, &d)| d < 0.0)
                .map(|(&m, &d)| m / -d)
                .fold(f64::INFINITY, f64::min);
        let eps = if eps.is_finite() { eps } else { 1.0 };
        let perturbed = DVector::from_iterator(n, masses.iter().zip(dm.iter()).map(|(&m, &d)| (m + eps * d).max(0.0)));
        let moved = aggregate_masses(points, &perturbed);
        let agg = (moved.mass - base.mass).abs().max((moved.first_moment - base.first_moment).amax());
        report.max_aggregate_change = report.max_aggregate_change.max(agg);
        let dj = moved.inertia.iter().zip(&base.inertia).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.max_inertia_change = report.max_inertia_change.max(dj);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n).map(|_| Vector3::from_fn(|_, _| rng.gen_range(-0.1..0.1))).collect()
    }

    fn random_poses(rng: &mut ChaCha8Rng, k: usize) -> Vec<Pose> {
        (0..k)
            .map(|_| {
                let r = Rotation3::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-3.0..3.0));
                Pose::new(*r.matrix(), Vector3::from_fn(|_, _| rng.gen_range(-0.5..0.5)))
            })
            .collect()
    }

    #[test]
    fn generic_draw_has_rank_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 10);
        let d = reduced_rank_diagnostics(&pts, &random_poses(&mut rng, 5), &GravityConvention::default()).unwrap();
        assert_eq!(d.rank, 4);
        assert_eq!(d.kernel.ncols(), 6);
        assert!(!d.coplanar);
        let masses = vec![0.1; 10];
        let rep = kernel_invariance_check(&d.kernel, &pts, &masses).unwrap();
        assert!(rep.conserves(1e-9), "{rep:?}");
        assert!(rep.max_inertia_change > 1e-6);
    }

    #[test]
    fn rotations_about_gravity_lose_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = random_points(&mut rng, 8);
        let poses: Vec<Pose> = (0..6)
            .map(|k| Pose::new(*Rotation3::from_axis_angle(&Vector3::z_axis(), k as f64).matrix(), Vector3::new(0.1, 0.2, 0.3)))
            .collect();
        let d = reduced_rank_diagnostics(&pts, &poses, &GravityConvention::default()).unwrap();
        assert!(d.rank < 4);
    }

    #[test]
    fn coplanar_points_are_flagged() {
        let pts = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.1, 0.0, 0.0), Vector3::new(0.0, 0.1, 0.0), Vector3::new(0.1, 0.1, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = reduced_rank_diagnostics(&pts, &random_poses(&mut rng, 4), &GravityConvention::default()).unwrap();
        assert!(d.coplanar);
    }

    #[test]
    fn empty_kernel_is_vacuous() {
        let pts = vec![Vector3::zeros(), Vector3::x() * 0.1, Vector3::y() * 0.1, Vector3::z() * 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = reduced_rank_diagnostics(&pts, &random_poses(&mut rng, 4), &GravityConvention::default()).unwrap();
        assert_eq!(d.rank, 4);
        assert_eq!(d.kernel.ncols(), 0);
        let rep = kernel_invariance_check(&d.kernel, &pts, &[0.1; 4]).unwrap();
        assert_eq!(rep.dimension, 0);
        assert!(rep.conserves(1e-12));
    }
}
