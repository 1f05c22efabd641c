//! Frontier selection, local planning and the agent loop.
//!
//! In [`Mode::Esc`] a frontier is picked by minimising the weighted
//! dissatisfaction of four commonsense rules plus a distance preference; in
//! [`Mode::Gow`] only the distance preference remains, which reduces to
//! nearest-frontier exploration.

mod agent;
mod planner;
mod program;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Cell;
use crate::softlogic::SoftLogicError;
use crate::world::DepthScan;

pub use agent::{Agent, AgentMode, Decision, FrontierChoice, Observation, StopReason, Target, LOOK_AROUND_STEPS};
pub use planner::{
    dead_reckon, disc_clear_on_map, forward_clear_on_map, plan_path, plan_route, planner_cost, steer, BlockedMoves,
    UNKNOWN_COST,
};
pub use program::{
    build_grounding, build_grounding_with, eligible_frontiers, frontier_arg, frontier_distances, select_frontier,
    CooccurScores, FrontierProgram, Selection, CHOOSE_FRONTIER, IS_COOCCUR, IS_NEAR_OBJ, IS_NEAR_ROOM, SHORT_DIST,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Esc,
    Gow,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    OneHot,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Minimum geodesic distance of an eligible frontier, meters.
    pub d_f: f64,
    /// Object context radius around a frontier centroid, meters.
    pub d_o: f64,
    /// Room context radius around a frontier centroid, meters.
    pub d_r: f64,
    pub w_obj: f64,
    pub w_obj_neg: f64,
    pub w_room: f64,
    pub w_room_neg: f64,
    /// Distance rule weight; `None` picks 2.0 when both object and room
    /// rules are on, else 1.0.
    pub w_dist: Option<f64>,
    pub use_object: bool,
    pub use_room: bool,
    /// Potential exponent, 1 or 2.
    pub p: u8,
    pub solver: SolverKind,
    pub mode: Mode,
    pub min_frontier_size: usize,
    /// Distance to the estimated goal position at which the agent stops.
    pub stop_distance: f64,
    pub max_steps: usize,
    /// Use ground-truth poses; otherwise dead-reckon and detect collisions
    /// from depth differences.
    pub use_gps: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            d_f: 1.6,
            d_o: 1.6,
            d_r: 0.6,
            w_obj: 1.0,
            w_obj_neg: 1.0,
            w_room: 1.0,
            w_room_neg: 1.0,
            w_dist: None,
            use_object: true,
            use_room: true,
            p: 1,
            solver: SolverKind::OneHot,
            mode: Mode::Esc,
            min_frontier_size: crate::mapping::DEFAULT_MIN_FRONTIER_SIZE,
            stop_distance: 0.75,
            max_steps: 500,
            use_gps: true,
        }
    }
}

impl PolicyConfig {
    pub fn gow() -> Self {
        Self {
            mode: Mode::Gow,
            ..Self::default()
        }
    }

    pub fn object_only() -> Self {
        Self {
            use_room: false,
            ..Self::default()
        }
    }

    pub fn room_only() -> Self {
        Self {
            use_object: false,
            ..Self::default()
        }
    }

    pub fn effective_w_dist(&self) -> f64 {
        self.w_dist
            .unwrap_or(if self.mode == Mode::Esc && self.use_object && self.use_room {
                2.0
            } else {
                1.0
            })
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::InvalidConfig(m.to_string()));
        for (name, v) in [("d_f", self.d_f), ("d_o", self.d_o), ("d_r", self.d_r)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be a non-negative distance"));
            }
        }
        for (name, w) in [
            ("w_obj", self.w_obj),
            ("w_obj_neg", self.w_obj_neg),
            ("w_room", self.w_room),
            ("w_room_neg", self.w_room_neg),
            ("w_dist", self.effective_w_dist()),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if !matches!(self.p, 1 | 2) {
            return bad("p must be 1 or 2");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.stop_distance > 0.0) {
            return bad("stop_distance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("no reachable frontier left")]
    NoFrontiers,
    #[error("no route to cell ({}, {})", .0.x, .0.y)]
    Unreachable(Cell),
    #[error("label `{0}` is both an object and a room with different scores")]
    LabelOverlap(String),
    #[error("scans differ in length: {0} vs {1}")]
    ScanMismatch(usize, usize),
    #[error("policy config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solver(#[from] SoftLogicError),
}

/// Mean absolute range change between two scans above 5 cm means the agent
/// actually moved.
pub fn detect_motion(prev: &DepthScan, curr: &DepthScan) -> Result<bool, PolicyError> {
    if prev.len() != curr.len() {
        return Err(PolicyError::ScanMismatch(prev.len(), curr.len()));
    }
    if prev.is_empty() {
        return Ok(false);
    }
    let total: f64 = prev.ranges.iter().zip(&curr.ranges).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / prev.len() as f64 > 0.05)
}
