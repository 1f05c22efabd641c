//! Ground-truth gridworld: occupancy, rooms, objects, embodiment and sensing.

mod gen;
mod io;
mod sim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, GridSpec};

pub use gen::{generate_world, make_episodes, EpisodeReport, Layout, RoomPriors, WorldGenConfig};
pub use io::{decode_rows, encode_rows, WorldFile};
pub use sim::{
    check_success, disc_is_clear, geodesic_distance, goal_distance_field, line_of_sight, ray_bearings, render_depth,
    step, visible_instances, visible_instances_within, Visible,
};

pub const STEP_M: f64 = 0.25;
pub const TURN_DEG: f64 = 30.0;
pub const AGENT_RADIUS_M: f64 = 0.18;
pub const HFOV_DEG: f64 = 79.0;
pub const N_RAYS: usize = 79;
pub const SENSOR_RANGE_M: f64 = 5.0;
pub const DEFAULT_SUCCESS_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("infeasible world config: {0}")]
    Infeasible(String),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("world file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub label: String,
    /// Inclusive cell bounds of the free interior.
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Room {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x <= self.x1 && c.y >= self.y0 && c.y <= self.y1
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Cell::new(x, y)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    pub position: Cell,
    pub id: u32,
}

/// Ground-truth environment.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWorld {
    pub spec: GridSpec,
    occupied: Vec<bool>,
    room_of: Vec<Option<u16>>,
    pub rooms: Vec<Room>,
    pub objects: Vec<ObjectInstance>,
    pub seed: u64,
}

impl GridWorld {
    /// Assemble a world and check its invariants: closed boundary, objects on
    /// free cells, unique object ids.
    pub fn new(
        spec: GridSpec,
        occupied: Vec<bool>,
        rooms: Vec<Room>,
        objects: Vec<ObjectInstance>,
        seed: u64,
    ) -> Result<Self, WorldError> {
        if occupied.len() != spec.len() {
            return Err(WorldError::Invalid(format!(
                "occupancy has {} cells, expected {}",
                occupied.len(),
                spec.len()
            )));
        }
        if rooms.len() > u16::MAX as usize {
            return Err(WorldError::Invalid("too many rooms".into()));
        }
        let mut room_of = vec![None; spec.len()];
        for (ri, r) in rooms.iter().enumerate() {
            for c in r.cells() {
                if let Some(i) = spec.index(c) {
                    if !occupied[i] {
                        room_of[i] = Some(ri as u16);
                    }
                }
            }
        }
        let w = Self {
            spec,
            occupied,
            room_of,
            rooms,
            objects,
            seed,
        };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<(), WorldError> {
        let (wd, ht) = (self.spec.width as i32, self.spec.height as i32);
        for c in self.spec.cells() {
            let boundary = c.x == 0 || c.y == 0 || c.x == wd - 1 || c.y == ht - 1;
            if boundary && !self.is_occupied(c) {
                return Err(WorldError::Invalid(format!("boundary cell ({}, {}) is free", c.x, c.y)));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for o in &self.objects {
            if self.is_occupied(o.position) {
                return Err(WorldError::Invalid(format!(
                    "object {} ({}) sits on an occupied cell",
                    o.id, o.category
                )));
            }
            if !ids.insert(o.id) {
                return Err(WorldError::Invalid(format!("duplicate object id {}", o.id)));
            }
        }
        Ok(())
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        self.spec.index(c).is_none_or(|i| self.occupied[i])
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn room_at(&self, c: Cell) -> Option<&Room> {
        let i = self.spec.index(c)?;
        self.room_of[i].map(|r| &self.rooms[r as usize])
    }

    pub fn room_label_at(&self, c: Cell) -> Option<&str> {
        self.room_at(c).map(|r| r.label.as_str())
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.category == category)
    }

    /// A cell whose center admits the agent's disc.
    pub fn is_clear(&self, c: Cell) -> bool {
        let (x, y) = self.spec.center(c);
        !self.is_occupied(c) && disc_is_clear(self, x, y, AGENT_RADIUS_M)
    }
}

/// One of twelve bearings, counter-clockwise from +x in 30° steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Heading(u8);

impl Heading {
    pub const COUNT: u8 = 12;

    pub fn new(index: u8) -> Self {
        Self(index % Self::COUNT)
    }

    pub fn from_degrees(deg: f64) -> Self {
        let i = (deg / TURN_DEG).round().rem_euclid(Self::COUNT as f64) as u8;
        Self::new(i)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 * TURN_DEG
    }

    pub fn radians(self) -> f64 {
        self.degrees().to_radians()
    }

    pub fn left(self) -> Self {
        Self::new(self.0 + 1)
    }

    pub fn right(self) -> Self {
        Self::new(self.0 + Self::COUNT - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: Heading) -> Self {
        Self { x, y, heading }
    }

    pub fn at_cell(spec: &GridSpec, c: Cell, heading: Heading) -> Self {
        let (x, y) = spec.center(c);
        Self { x, y, heading }
    }

    pub fn cell(&self, spec: &GridSpec) -> Cell {
        spec.cell_at(self.x, self.y)
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveForward,
    RotateRight,
    RotateLeft,
    LookUp,
    LookDown,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayHit {
    Obstacle,
    MaxRange,
}

/// Horizontal depth scan; bearings are degrees relative to the heading,
/// positive to the left, from `-HFOV/2` to `+HFOV/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub bearings: Vec<f64>,
    pub ranges: Vec<f64>,
    pub hits: Vec<RayHit>,
}

impl DepthScan {
    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Range along the ray closest to `bearing_deg`, if within the field of view.
    pub fn range_at(&self, bearing_deg: f64) -> Option<f64> {
        let (i, b) = self
            .bearings
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - bearing_deg).abs().total_cmp(&(b.1 - bearing_deg).abs()))?;
        ((b - bearing_deg).abs() <= 0.5 + 1e-9).then(|| self.ranges[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: usize,
    pub world_id: u64,
    pub start_pose: Pose,
    pub goal: String,
    pub shortest_geodesic: f64,
}

/// Signed difference `a - b` in degrees wrapped to `(-180, 180]`.
pub fn wrap_degrees(d: f64) -> f64 {
    let r = d.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_rotation_convention() {
        let h = Heading::new(0);
        assert_eq!(h.right().degrees(), 330.0);
        assert_eq!(h.left().degrees(), 30.0);
        assert_eq!(Heading::from_degrees(-30.0), Heading::new(11));
        let mut g = h;
        for _ in 0..12 {
            g = g.right();
        }
        assert_eq!(g, h);
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(45.0), 45.0);
    }
}
