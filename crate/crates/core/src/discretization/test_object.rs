//! The modular benchmark object: a PLA block with a 4×4 grid of slots, each holding a steel
//! slug, an ABS slug, or nothing.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::shape::{Fill, Primitive, PrimitiveKind, PrimitivePose, ShapeSpec};
use crate::error::{invalid, Error, Result};
use crate::rigid_body::InertialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Hammer,
    Barbell,
    Tee,
    Uniform,
    Corners,
    Rod,
    HalfNHalf,
    Empty,
}

impl Configuration {
    pub const ALL: [Configuration; 8] = [
        Configuration::Hammer,
        Configuration::Barbell,
        Configuration::Tee,
        Configuration::Uniform,
        Configuration::Corners,
        Configuration::Rod,
        Configuration::HalfNHalf,
        Configuration::Empty,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Configuration::Hammer => "hammer",
            Configuration::Barbell => "barbell",
            Configuration::Tee => "tee",
            Configuration::Uniform => "uniform",
            Configuration::Corners => "corners",
            Configuration::Rod => "rod",
            Configuration::HalfNHalf => "halfnhalf",
            Configuration::Empty => "empty",
        }
    }

    /// Slot occupancy. Row 0 is the `+y` end of the block, column 0 the `−x` side.
    pub fn layout(&self) -> [[Slot; 4]; 4] {
        use Slot::{Abs as A, Air as O, Steel as S};
        match self {
            Configuration::Hammer => [[S, S, S, S], [O, A, O, O], [O, A, O, O], [O, A, O, O]],
            Configuration::Barbell => [[S, S, S, S], [O, A, A, O], [O, A, A, O], [S, S, S, S]],
            Configuration::Tee => [[A, A, A, A], [O, S, S, O], [O, S, S, O], [O, S, S, O]],
            Configuration::Uniform => [[S; 4]; 4],
            Configuration::Corners => [[S, O, O, S], [O; 4], [O; 4], [S, O, O, S]],
            Configuration::Rod => [[O, O, O, S]; 4],
            Configuration::HalfNHalf => [[S, S, A, A]; 4],
            Configuration::Empty => [[O; 4]; 4],
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_', ' '], "");
        Configuration::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| invalid(format!("unknown object configuration `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Steel,
    Abs,
    Air,
}

/// Geometry constants of the modular object.
///
/// The block measures `block_cells × grid_pitch`; the default pitch is the grid spacing of a
/// 0.04 points/cm³ sampling, so that density places exactly 4 × 7 × 2 = 56 points inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestObjectGeometry {
    pub grid_pitch: f64,
    pub block_cells: [f64; 3],
    /// Block centre in the body (sensor flange) frame.
    pub block_center: [f64; 3],
    /// Effective density of the printed block (partial infill), kg/m³.
    pub structure_density: f64,
    /// Slot centre spacing along x and y.
    pub slot_pitch: [f64; 2],
    pub slot_radius: f64,
    pub slot_height: f64,
    pub steel_mass: f64,
    pub abs_mass: f64,
}

impl Default for TestObjectGeometry {
    fn default() -> Self {
        let pitch = 0.01 * 25f64.cbrt();
        Self {
            grid_pitch: pitch,
            block_cells: [4.0, 7.0, 2.0],
            block_center: [0.0, 0.0, pitch],
            structure_density: 400.0,
            slot_pitch: [pitch, 1.75 * pitch],
            slot_radius: 0.011,
            slot_height: 1.6 * pitch,
            steel_mass: 0.101,
            abs_mass: 0.017,
        }
    }
}

impl TestObjectGeometry {
    pub fn block_size(&self) -> [f64; 3] {
        self.block_cells.map(|c| c * self.grid_pitch)
    }

    /// Body-frame centre of slot `(row, col)`.
    pub fn slot_center(&self, row: usize, col: usize) -> [f64; 3] {
        let c = self.block_center;
        [
            c[0] + (col as f64 - 1.5) * self.slot_pitch[0],
            c[1] + (1.5 - row as f64) * self.slot_pitch[1],
            c[2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestObjectConfig {
    pub configuration: Configuration,
    #[serde(default)]
    pub geometry: TestObjectGeometry,
}

impl TestObjectConfig {
    pub fn new(configuration: Configuration) -> Self {
        Self { configuration, geometry: TestObjectGeometry::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestObject {
    pub shape: ShapeSpec,
    pub truth: InertialParams,
    /// Bounding-box side lengths of the block.
    pub extent: Vector3<f64>,
}

/// Shape and exact ground truth of one benchmark configuration. Slot payloads are point masses
/// at the slot centres.
pub fn build_test_object(config: &TestObjectConfig) -> Result<TestObject> {
    let geo = &config.geometry;
    let mut primitives = vec![Primitive::new(
        PrimitiveKind::Box { size: geo.block_size() },
        PrimitivePose::at(geo.block_center),
        Fill::Density(geo.structure_density),
    )];
    for (row, slots) in config.configuration.layout().iter().enumerate() {
        for (col, slot) in slots.iter().enumerate() {
            let mass = match slot {
                Slot::Steel => geo.steel_mass,
                Slot::Abs => geo.abs_mass,
                Slot::Air => continue,
            };
            primitives.push(Primitive::new(
                PrimitiveKind::Cylinder { radius: geo.slot_radius, height: geo.slot_height },
                PrimitivePose::at(geo.slot_center(row, col)),
                Fill::Lumped(mass),
            ));
        }
    }
    let shape = ShapeSpec::new(config.configuration.name(), primitives);
    shape.validate()?;
    let truth = shape.mass_properties()?;
    Ok(TestObject { shape, truth, extent: Vector3::from(geo.block_size()) })
}
