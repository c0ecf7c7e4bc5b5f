use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rigid_body::Pose;

const UNIT_TOL: f64 = 1e-9;

/// A revolute joint followed by a rigid link offset expressed in the rotated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub axis: Vector3<f64>,
    pub offset: Vector3<f64>,
}

/// Serial chain of revolute joints about fixed local axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub base: Pose,
    pub joints: Vec<Joint>,
}

/// Pose and world-frame motion of the chain's end frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndMotion {
    pub pose: Pose,
    pub lin_vel: Vector3<f64>,
    pub ang_vel: Vector3<f64>,
    pub lin_acc: Vector3<f64>,
    pub ang_acc: Vector3<f64>,
}

impl Default for KinematicChain {
    /// Six joints alternating z/y axes, sized so a ~0.1 m object moves at wrist-like speeds.
    fn default() -> Self {
        let z = Vector3::z();
        let y = Vector3::y();
        let joints = [
            (z, Vector3::new(0.0, 0.0, 0.3)),
            (y, Vector3::new(0.25, 0.0, 0.0)),
            (z, Vector3::new(0.2, 0.0, 0.0)),
            (y, Vector3::new(0.0, 0.0, 0.1)),
            (z, Vector3::new(0.1, 0.0, 0.0)),
            (y, Vector3::new(0.0, 0.0, 0.08)),
        ]
        .into_iter()
        .map(|(axis, offset)| Joint { axis, offset })
        .collect();
        Self { base: Pose::identity(), joints }
    }
}

fn rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    *Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), angle).matrix()
}

impl KinematicChain {
    pub fn new(base: Pose, joints: Vec<Joint>) -> Result<Self> {
        let chain = Self { base, joints };
        chain.validate()?;
        Ok(chain)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(invalid("kinematic chain needs at least one joint"));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if (j.axis.norm() - 1.0).abs() > UNIT_TOL {
                return Err(invalid(format!("joint {i} axis is not a unit vector")));
            }
        }
        crate::rigid_body::check_rotation(&self.base.rotation)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dof() {
            return Err(Error::JointCountMismatch { expected: self.dof(), got: n });
        }
        Ok(())
    }

    pub fn forward_kinematics(&self, angles: &[f64]) -> Result<Pose> {
        self.check_len(angles.len())?;
        Ok(self.joints.iter().zip(angles).fold(self.base, |pose, (joint, &q)| {
            let r = pose.rotation * rotation(&joint.axis, q);
            Pose::new(r, pose.translation + r * joint.offset)
        }))
    }

    /// Forward propagation of velocities and accelerations for joint rates `dq` and `ddq`.
    pub fn end_motion(&self, q: &[f64], dq: &[f64], ddq: &[f64]) -> Result<EndMotion> {
        self.check_len(q.len())?;
        self.check_len(dq.len())?;
        self.check_len(ddq.len())?;
        let mut pose = self.base;
        let (mut v, mut w, mut a, mut alpha) = (Vector3::zeros(), Vector3::zeros(), Vector3::zeros(), Vector3::zeros());
        for (i, joint) in self.joints.iter().enumerate() {
            let z = pose.rotation * joint.axis;
            alpha += z * ddq[i] + w.cross(&(z * dq[i]));
            w += z * dq[i];
            let r = pose.rotation * rotation(&joint.axis, q[i]);
            let arm = r * joint.offset;
            v += w.cross(&arm);
            a += alpha.cross(&arm) + w.cross(&w.cross(&arm));
            pose = Pose::new(r, pose.translation + arm);
        }
        Ok(EndMotion { pose, lin_vel: v, ang_vel: w, lin_acc: a, ang_acc: alpha })
    }
}
