use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rigid_body::{transform_params, Frame, InertialParams, Pose};

const BOUNDARY_EPS: f64 = 1e-12;

/// Cylinders are aligned with their local z axis; boxes are centred on their pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PrimitiveKind {
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
}

/// How a primitive contributes mass: spread at a uniform density (kg/m³) or lumped at its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    Density(f64),
    Lumped(f64),
}

/// Placement of a primitive in the body frame; `rpy` is roll, pitch, yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrimitivePose {
    pub position: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl PrimitivePose {
    pub fn at(position: [f64; 3]) -> Self {
        Self { position, rpy: [0.0; 3] }
    }

    pub fn to_pose(&self) -> Pose {
        let [r, p, y] = self.rpy;
        Pose::new(
            *Rotation3::from_euler_angles(r, p, y).matrix(),
            Vector3::from(self.position),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub kind: PrimitiveKind,
    #[serde(default)]
    pub pose: PrimitivePose,
    pub fill: Fill,
}

impl Primitive {
    pub fn new(kind: PrimitiveKind, pose: PrimitivePose, fill: Fill) -> Self {
        Self { kind, pose, fill }
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            PrimitiveKind::Box { size } => size.iter().product(),
            PrimitiveKind::Cylinder { radius, height } => PI * radius * radius * height,
            PrimitiveKind::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
        }
    }

    fn local_contains(&self, q: &Vector3<f64>) -> bool {
        match self.kind {
            PrimitiveKind::Box { size } => (0..3).all(|i| q[i].abs() <= 0.5 * size[i] + BOUNDARY_EPS),
            PrimitiveKind::Cylinder { radius, height } => {
                q.x * q.x + q.y * q.y <= radius * radius + BOUNDARY_EPS && q.z.abs() <= 0.5 * height + BOUNDARY_EPS
            }
            PrimitiveKind::Sphere { radius } => q.norm_squared() <= radius * radius + BOUNDARY_EPS,
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let pose = self.pose.to_pose();
        self.local_contains(&(pose.rotation.transpose() * (p - pose.translation)))
    }

    fn half_extents(&self) -> Vector3<f64> {
        match self.kind {
            PrimitiveKind::Box { size } => Vector3::from(size) * 0.5,
            PrimitiveKind::Cylinder { radius, height } => Vector3::new(radius, radius, 0.5 * height),
            PrimitiveKind::Sphere { radius } => Vector3::repeat(radius),
        }
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let pose = self.pose.to_pose();
        let half = pose.rotation.abs() * self.half_extents();
        (pose.translation - half, pose.translation + half)
    }

    /// Exact mass properties about the body origin.
    pub fn mass_properties(&self) -> Result<InertialParams> {
        let pose = self.pose.to_pose();
        let (mass, local) = match self.fill {
            Fill::Lumped(m) => (m, Matrix3::zeros()),
            Fill::Density(rho) => {
                let m = rho * self.volume();
                let d = match self.kind {
                    PrimitiveKind::Box { size: [a, b, c] } => {
                        Vector3::new(b * b + c * c, a * a + c * c, a * a + b * b) * (m / 12.0)
                    }
                    PrimitiveKind::Cylinder { radius, height } => {
                        let side = m * (3.0 * radius * radius + height * height) / 12.0;
                        Vector3::new(side, side, 0.5 * m * radius * radius)
                    }
                    PrimitiveKind::Sphere { radius } => Vector3::repeat(0.4 * m * radius * radius),
                };
                (m, Matrix3::from_diagonal(&d))
            }
        };
        let centred = InertialParams::from_com(mass, Vector3::zeros(), &local, Frame::Body);
        transform_params(&centred, &pose, Frame::Body)
    }

    fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match self.kind {
            PrimitiveKind::Box { size } => size.to_vec(),
            PrimitiveKind::Cylinder { radius, height } => vec![radius, height],
            PrimitiveKind::Sphere { radius } => vec![radius],
        };
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(invalid("primitive dimensions must be positive"));
        }
        let amount = match self.fill {
            Fill::Density(x) | Fill::Lumped(x) => x,
        };
        if !(amount.is_finite() && amount >= 0.0) {
            return Err(invalid("primitive density or mass must be non-negative"));
        }
        Ok(())
    }
}

/// A solid described as the union of primitives, with its ground-truth mass distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub name: String,
    pub primitives: Vec<Primitive>,
}

impl ShapeSpec {
    pub fn new(name: impl Into<String>, primitives: Vec<Primitive>) -> Self {
        Self { name: name.into(), primitives }
    }

    /// One primitive centred on the body origin.
    pub fn single(name: impl Into<String>, kind: PrimitiveKind, fill: Fill) -> Self {
        Self::new(name, vec![Primitive::new(kind, PrimitivePose::default(), fill)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() {
            return Err(invalid("shape has no primitives"));
        }
        self.primitives.iter().try_for_each(Primitive::validate)?;
        if self.mass_properties()?.mass <= 0.0 {
            return Err(invalid("shape has no mass"));
        }
        Ok(())
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.primitives.iter().any(|prim| prim.contains(p))
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        self.primitives.iter().map(Primitive::bounding_box).fold(
            (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), (a, b)| (lo.inf(&a), hi.sup(&b)),
        )
    }

    pub fn extent(&self) -> Vector3<f64> {
        let (lo, hi) = self.bounding_box();
        hi - lo
    }

    /// Volume of the union. Exact for a single primitive, otherwise a midpoint-rule estimate
    /// on a grid with `resolution` cells along the longest side.
    pub fn volume(&self, resolution: usize) -> f64 {
        if let [only] = self.primitives.as_slice() {
            return only.volume();
        }
        let (lo, hi) = self.bounding_box();
        let side = (hi - lo).max() / resolution.max(1) as f64;
        let n = (hi - lo).map(|l| ((l / side).ceil() as usize).max(1));
        let cell = Vector3::new((hi.x - lo.x) / n.x as f64, (hi.y - lo.y) / n.y as f64, (hi.z - lo.z) / n.z as f64);
        let mut inside = 0usize;
        for k in 0..n.z {
            for j in 0..n.y {
                for i in 0..n.x {
                    let p = lo + cell.component_mul(&Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5));
                    if self.contains(&p) {
                        inside += 1;
                    }
                }
            }
        }
        inside as f64 * cell.x * cell.y * cell.z
    }

    /// Exact ground truth: sum of the primitives' mass properties.
    pub fn mass_properties(&self) -> Result<InertialParams> {
        self.primitives
            .iter()
            .try_fold(InertialParams::zero(Frame::Body), |acc, p| Ok(acc.add(&p.mass_properties()?)))
    }

    /// Geometric centre of the bounding box when it lies inside the shape, otherwise the centre
    /// of the first primitive.
    pub fn centroid(&self) -> Vector3<f64> {
        let (lo, hi) = self.bounding_box();
        let mid = (lo + hi) * 0.5;
        if self.contains(&mid) {
            mid
        } else {
            Vector3::from(self.primitives[0].pose.position)
        }
    }
}
