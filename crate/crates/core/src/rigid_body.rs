//! Rigid-body parameters, Newton–Euler wrenches and their linear regressors.
//!
//! Conventions used throughout the crate:
//!
//! * parameters are stored in the order `[m, m·cx, m·cy, m·cz, Jxx, Jxy, Jxz, Jyy, Jyz, Jzz]`,
//!   with the inertia tensor taken about the body origin;
//! * wrench vectors are stacked as `[f; τ]`;
//! * gravity enters through the proper acceleration `a − g`, so a statically held body of mass
//!   `m` produces the supporting force `−m·g`;
//! * a [`KinematicSample`] describes the body frame in the world frame, with all velocities and
//!   accelerations expressed in world axes.

use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, SVector, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default absolute eigenvalue floor for the physical-consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-8;

const ORTHONORMAL_TOL: f64 = 1e-9;

pub type ParamVector = SVector<f64, 10>;
pub type Regressor = SMatrix<f64, 6, 10>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    World,
    Body,
    Sensor,
}

/// Mass, first mass moment and inertia tensor (about the frame origin) of a rigid body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertialParams {
    pub mass: f64,
    /// `m·c`
    pub first_moment: Vector3<f64>,
    /// Unique entries `[Jxx, Jxy, Jxz, Jyy, Jyz, Jzz]`.
    pub inertia: [f64; 6],
    pub frame: Frame,
}

impl InertialParams {
    pub fn new(mass: f64, first_moment: Vector3<f64>, inertia: [f64; 6], frame: Frame) -> Self {
        Self { mass, first_moment, inertia, frame }
    }

    /// Builds parameters from a centre of mass and a full inertia matrix; only the upper
    /// triangle of `inertia` is read.
    pub fn from_com(mass: f64, com: Vector3<f64>, inertia: &Matrix3<f64>, frame: Frame) -> Self {
        Self::new(mass, com * mass, upper_triangle(inertia), frame)
    }

    /// A massless body. Useful as the identity for [`InertialParams::add`].
    pub fn zero(frame: Frame) -> Self {
        Self::new(0.0, Vector3::zeros(), [0.0; 6], frame)
    }

    pub fn from_vector(v: &ParamVector, frame: Frame) -> Self {
        Self::new(v[0], Vector3::new(v[1], v[2], v[3]), [v[4], v[5], v[6], v[7], v[8], v[9]], frame)
    }

    pub fn to_vector(&self) -> ParamVector {
        let h = &self.first_moment;
        let j = &self.inertia;
        ParamVector::from_column_slice(&[self.mass, h.x, h.y, h.z, j[0], j[1], j[2], j[3], j[4], j[5]])
    }

    /// Centre of mass. Non-finite when the mass is zero.
    pub fn com(&self) -> Vector3<f64> {
        self.first_moment / self.mass
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        let [xx, xy, xz, yy, yz, zz] = self.inertia;
        Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
    }

    /// Componentwise sum; mass and inertia are additive when both share a frame.
    pub fn add(&self, other: &Self) -> Self {
        Self::from_vector(&(self.to_vector() + other.to_vector()), self.frame)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    /// Smallest eigenvalue of the pseudo-inertia matrix.
    pub fn min_pseudo_inertia_eigenvalue(&self) -> f64 {
        if !self.is_finite() {
            return f64::NAN;
        }
        SymmetricEigen::new(pseudo_inertia(self)).eigenvalues.min()
    }

    /// True when the parameters are realizable by a non-negative mass density.
    pub fn is_physically_consistent(&self, tol: f64) -> bool {
        let lambda = self.min_pseudo_inertia_eigenvalue();
        lambda.is_finite() && lambda >= -tol
    }
}

fn upper_triangle(m: &Matrix3<f64>) -> [f64; 6] {
    [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)], m[(2, 2)]]
}

/// Pose of the body frame in the world frame: `p_world = rotation · p_body + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &Pose) -> Self {
        Self::new(self.rotation * other.rotation, self.rotation * other.translation + self.translation)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Deviation of `r` from a proper rotation, as the larger of `‖RᵀR − I‖∞` and `|det R − 1|`.
pub fn rotation_deviation(r: &Matrix3<f64>) -> f64 {
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    ortho.max((r.determinant() - 1.0).abs())
}

pub fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    let deviation = rotation_deviation(r);
    if deviation.is_finite() && deviation <= ORTHONORMAL_TOL {
        Ok(())
    } else {
        Err(Error::NotOrthonormal { deviation })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub t: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub lin_vel: Vector3<f64>,
    pub ang_vel: Vector3<f64>,
    pub lin_acc: Vector3<f64>,
    pub ang_acc: Vector3<f64>,
}

impl KinematicSample {
    /// A body held still at `pose`.
    pub fn at_rest(t: f64, pose: &Pose) -> Self {
        Self {
            t,
            rotation: pose.rotation,
            translation: pose.translation,
            lin_vel: Vector3::zeros(),
            ang_vel: Vector3::zeros(),
            lin_acc: Vector3::zeros(),
            ang_acc: Vector3::zeros(),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.rotation, self.translation)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.t.is_finite()
            && self.rotation.iter().all(|x| x.is_finite())
            && [self.translation, self.lin_vel, self.ang_vel, self.lin_acc, self.ang_acc]
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(invalid("kinematic sample has non-finite entries"));
        }
        check_rotation(&self.rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub frame: Frame,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>, frame: Frame) -> Self {
        Self { force, torque, frame }
    }

    pub fn from_vector(v: &Vector6<f64>, frame: Frame) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into(), frame)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.force);
        v.fixed_rows_mut::<3>(3).copy_from(&self.torque);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|x| x.is_finite())
    }

    /// Re-expresses a wrench given about the origin of a frame located at `pose` in the
    /// parent frame: the force is rotated and the torque is taken about the parent origin.
    pub fn transformed(&self, pose: &Pose, frame: Frame) -> Self {
        let force = pose.rotation * self.force;
        let torque = pose.rotation * self.torque + pose.translation.cross(&force);
        Self::new(force, torque, frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityConvention {
    pub g: Vector3<f64>,
}

impl Default for GravityConvention {
    fn default() -> Self {
        Self { g: Vector3::new(0.0, 0.0, -9.81) }
    }
}

impl GravityConvention {
    pub fn new(g: Vector3<f64>) -> Self {
        Self { g }
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `L(v)` such that `J·v = L(v)·[Jxx, Jxy, Jxz, Jyy, Jyz, Jzz]`.
fn inertia_action(v: &Vector3<f64>) -> SMatrix<f64, 3, 6> {
    SMatrix::<f64, 3, 6>::from_row_slice(&[
        v.x, v.y, v.z, 0.0, 0.0, 0.0, //
        0.0, v.x, 0.0, v.y, v.z, 0.0, //
        0.0, 0.0, v.x, 0.0, v.y, v.z,
    ])
}

/// Body-axis proper acceleration, angular velocity and angular acceleration.
fn body_motion(state: &KinematicSample, gravity: &GravityConvention) -> [Vector3<f64>; 3] {
    let rt = state.rotation.transpose();
    [rt * (state.lin_acc - gravity.g), rt * state.ang_vel, rt * state.ang_acc]
}

/// Wrench applied by the support to the body, about the body origin, in body axes.
pub fn body_wrench(
    params: &InertialParams,
    state: &KinematicSample,
    gravity: &GravityConvention,
) -> Result<Wrench> {
    state.validate()?;
    let [u, w, alpha] = body_motion(state, gravity);
    let h = params.first_moment;
    let j = params.inertia_matrix();
    let force = u * params.mass + alpha.cross(&h) + w.cross(&w.cross(&h));
    let torque = h.cross(&u) + j * alpha + w.cross(&(j * w));
    Ok(Wrench::new(force, torque, Frame::Body))
}

/// Wrench applied by the support to the body, in world axes and about the world origin.
pub fn newton_euler_wrench(
    params: &InertialParams,
    state: &KinematicSample,
    gravity: &GravityConvention,
) -> Result<Wrench> {
    Ok(body_wrench(params, state, gravity)?.transformed(&state.pose(), Frame::World))
}

/// Regressor of [`body_wrench`]: `[f; τ]_body = A·θ`.
pub fn body_regressor(state: &KinematicSample, gravity: &GravityConvention) -> Result<Regressor> {
    state.validate()?;
    let [u, w, alpha] = body_motion(state, gravity);
    let sw = skew(&w);
    let mut a = Regressor::zeros();
    a.fixed_view_mut::<3, 1>(0, 0).copy_from(&u);
    a.fixed_view_mut::<3, 3>(0, 1).copy_from(&(skew(&alpha) + sw * sw));
    a.fixed_view_mut::<3, 3>(3, 1).copy_from(&(-skew(&u)));
    a.fixed_view_mut::<3, 6>(3, 4).copy_from(&(inertia_action(&alpha) + sw * inertia_action(&w)));
    Ok(a)
}

/// Rows of the world-frame wrench in terms of the body-frame wrench.
fn wrench_transfer(pose: &Pose) -> SMatrix<f64, 6, 6> {
    let mut x = SMatrix::<f64, 6, 6>::zeros();
    x.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    x.fixed_view_mut::<3, 3>(3, 3).copy_from(&pose.rotation);
    x.fixed_view_mut::<3, 3>(3, 0).copy_from(&(skew(&pose.translation) * pose.rotation));
    x
}

/// Regressor of [`newton_euler_wrench`]: `[f; τ]_world = A·θ` with `θ` in the body frame.
pub fn full_regressor(state: &KinematicSample, gravity: &GravityConvention) -> Result<Regressor> {
    Ok(wrench_transfer(&state.pose()) * body_regressor(state, gravity)?)
}

/// Parameters of a unit point mass located at `p`.
pub fn point_parameters(p: &Vector3<f64>) -> ParamVector {
    let (x, y, z) = (p.x, p.y, p.z);
    ParamVector::from_column_slice(&[
        1.0,
        x,
        y,
        z,
        y * y + z * z,
        -x * y,
        -x * z,
        x * x + z * z,
        -y * z,
        x * x + y * y,
    ])
}

fn points_matrix(points: &[Vector3<f64>]) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(DMatrix::from_fn(10, points.len(), |r, c| point_parameters(&points[c])[r]))
}

/// World-frame full-dynamics regressor of a set of point masses: column `i` is the wrench of a
/// unit mass at body position `points[i]`.
pub fn point_full_regressor(
    points: &[Vector3<f64>],
    state: &KinematicSample,
    gravity: &GravityConvention,
) -> Result<DMatrix<f64>> {
    let phi = points_matrix(points)?;
    let a = full_regressor(state, gravity)?;
    Ok(DMatrix::from_fn(6, 10, |r, c| a[(r, c)]) * phi)
}

/// Gravity-only regressor of a set of point masses at a given pose, in world axes about the
/// world origin. Force rows are `−g` and torque rows are `−[ʷpᵢ]×g`.
pub fn reduced_regressor(
    points: &[Vector3<f64>],
    pose: &Pose,
    gravity: &GravityConvention,
) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    check_rotation(&pose.rotation)?;
    let g = gravity.g;
    let mut a = DMatrix::zeros(6, points.len());
    for (i, p) in points.iter().enumerate() {
        let pw = pose.transform_point(p);
        a.fixed_view_mut::<3, 1>(0, i).copy_from(&(-g));
        a.fixed_view_mut::<3, 1>(3, i).copy_from(&(-pw.cross(&g)));
    }
    Ok(a)
}

/// The 4×4 pseudo-inertia `[½tr(J)·I − J, h; hᵀ, m]`.
pub fn pseudo_inertia(params: &InertialParams) -> Matrix4<f64> {
    let j = params.inertia_matrix();
    let sigma = Matrix3::identity() * (0.5 * j.trace()) - j;
    let h = params.first_moment;
    let mut p = Matrix4::zeros();
    p.fixed_view_mut::<3, 3>(0, 0).copy_from(&sigma);
    p.fixed_view_mut::<3, 1>(0, 3).copy_from(&h);
    p.fixed_view_mut::<1, 3>(3, 0).copy_from(&h.transpose());
    p[(3, 3)] = params.mass;
    p
}

fn from_pseudo_inertia(p: &Matrix4<f64>, frame: Frame) -> InertialParams {
    let sigma: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into();
    let sigma = (sigma + sigma.transpose()) * 0.5;
    let j = Matrix3::identity() * sigma.trace() - sigma;
    InertialParams::new(p[(3, 3)], p.fixed_view::<3, 1>(0, 3).into(), upper_triangle(&j), frame)
}

/// Expresses `params` in a frame where points map as `p' = R·p + t`.
pub fn transform_params(params: &InertialParams, pose: &Pose, frame: Frame) -> Result<InertialParams> {
    check_rotation(&pose.rotation)?;
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.translation);
    Ok(from_pseudo_inertia(&(t * pseudo_inertia(params) * t.transpose()), frame))
}
