//! Object shapes, point sampling and aggregation of point masses.

mod shape;
mod test_object;

pub use shape::{Fill, Primitive, PrimitiveKind, PrimitivePose, ShapeSpec};
pub use test_object::{build_test_object, Configuration, Slot, TestObject, TestObjectConfig, TestObjectGeometry};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rigid_body::{point_parameters, Frame, InertialParams, ParamVector};

/// Point positions produced by [`sample_points`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub positions: Vec<Vector3<f64>>,
    /// Grid pitch in metres.
    pub spacing: f64,
    /// Set when the grid missed the shape and a single centroid point was returned.
    pub fallback: bool,
}

/// Point positions in the body frame with their masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassModel {
    pub positions: Vec<Vector3<f64>>,
    pub masses: Vec<f64>,
}

impl PointMassModel {
    pub fn new(positions: Vec<Vector3<f64>>, masses: Vec<f64>) -> Result<Self> {
        if positions.len() != masses.len() {
            return Err(invalid(format!(
                "{} positions but {} masses",
                positions.len(),
                masses.len()
            )));
        }
        Ok(Self { positions, masses })
    }

    /// Every point gets `total / n`.
    pub fn uniform(positions: Vec<Vector3<f64>>, total: f64) -> Self {
        let each = total / positions.len().max(1) as f64;
        let masses = vec![each; positions.len()];
        Self { positions, masses }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Regular grid sampling of `shape` at `density` points per cubic centimetre.
///
/// The grid is anchored at the lower corner of the shape's bounding box; `seed` only moves the
/// grid phase within `[0.25, 0.75)` of a cell along each axis. When no grid node falls inside the
/// shape a single point at its centroid is returned with `fallback` set.
pub fn sample_points(shape: &ShapeSpec, density: f64, seed: u64) -> Result<PointSample> {
    if !(density.is_finite() && density > 0.0) {
        return Err(invalid(format!("point density must be positive, got {density}")));
    }
    shape.validate()?;
    let spacing = 0.01 * density.powf(-1.0 / 3.0);
    let (lo, hi) = shape.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = Vector3::from_fn(|_, _| rng.gen_range(0.25..0.75));

    let counts = Vector3::from_fn(|i, _| {
        let span = hi[i] - lo[i] - phase[i] * spacing;
        if span < 0.0 {
            0
        } else {
            (span / spacing).floor() as usize + 1
        }
    });
    let mut positions = Vec::new();
    for k in 0..counts.z {
        for j in 0..counts.y {
            for i in 0..counts.x {
                let p = lo + Vector3::new(i as f64 + phase.x, j as f64 + phase.y, k as f64 + phase.z) * spacing;
                if shape.contains(&p) {
                    positions.push(p);
                }
            }
        }
    }
    if positions.is_empty() {
        return Ok(PointSample { positions: vec![shape.centroid()], spacing, fallback: true });
    }
    Ok(PointSample { positions, spacing, fallback: false })
}

/// Total mass, first moment and origin-referenced inertia of a set of point masses.
pub fn aggregate(model: &PointMassModel) -> Result<InertialParams> {
    if model.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if model.positions.len() != model.masses.len() {
        return Err(invalid("positions and masses differ in length"));
    }
    if model.masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(invalid("point masses must be finite and non-negative"));
    }
    let theta = model
        .positions
        .iter()
        .zip(&model.masses)
        .fold(ParamVector::zeros(), |acc, (p, &m)| acc + point_parameters(p) * m);
    if theta[0] <= 0.0 {
        return Err(Error::DegenerateBody);
    }
    Ok(InertialParams::from_vector(&theta, Frame::Body))
}
