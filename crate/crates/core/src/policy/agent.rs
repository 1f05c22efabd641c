//! The exploring agent: look around, map, pick frontiers, chase the goal.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridSpec};
use crate::mapping::{extract_frontiers, CellState, Frontier, NavMap, SemanticMap};
use crate::perception::{Detection, DetectionKind, CONFIDENCE_THRESHOLD};
use crate::world::{Action, DepthScan, Pose, SENSOR_RANGE_M};

use super::planner::{dead_reckon, plan_route, steer, BlockedMoves};
use super::program::{build_grounding, select_frontier, CooccurScores};
use super::{detect_motion, PolicyConfig, PolicyError};

/// Rotations spent on the initial look-around.
pub const LOOK_AROUND_STEPS: usize = 12;

/// What the agent is currently heading for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Frontier {
        id: usize,
        anchor: Cell,
        centroid: (f64, f64),
    },
    GoalPoint {
        x: f64,
        y: f64,
    },
    LongRangeHeading {
        x: f64,
        y: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    LookAround,
    Explore,
    GoalNav,
    LongRange,
    Recover,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GoalReached,
    ExplorationExhausted,
    StepLimit,
}

/// What the agent perceives before choosing an action.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Ground-truth pose; only read at step 0 when GPS is disabled.
    pub pose: Pose,
    pub scan: DepthScan,
    pub detections: Vec<Detection>,
}

/// A frontier decision made during a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierChoice {
    pub frontier_id: usize,
    pub anchor: Cell,
    pub centroid: (f64, f64),
    pub energy: f64,
    pub solve_secs: f64,
    /// Ids and distances of the eligible candidates.
    pub candidates: Vec<(usize, f64)>,
    pub threshold_waived: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub mode: AgentMode,
    pub choice: Option<FrontierChoice>,
    pub stop_reason: Option<StopReason>,
    /// The goal detection the agent committed to this step, if any.
    pub goal_detection: Option<Detection>,
}

/// Per-episode agent state.
#[derive(Clone, Debug)]
pub struct Agent {
    cfg: PolicyConfig,
    goal: String,
    scores: CooccurScores,
    nav: NavMap,
    sem: SemanticMap,
    pose: Pose,
    poses: Vec<Pose>,
    target: Option<Target>,
    steps: usize,
    prev_scan: Option<DepthScan>,
    last_action: Option<Action>,
    blocked: BlockedMoves,
    /// Frontier anchors the planner could not reach.
    unreachable: BTreeSet<Cell>,
    recovering: bool,
    done: bool,
}

impl Agent {
    pub fn new(cfg: PolicyConfig, spec: GridSpec, goal: &str, scores: CooccurScores, start: Pose) -> Self {
        Self {
            cfg,
            goal: goal.to_string(),
            scores,
            nav: NavMap::new(spec),
            sem: SemanticMap::new(spec),
            pose: start,
            poses: Vec::new(),
            target: None,
            steps: 0,
            prev_scan: None,
            last_action: None,
            blocked: BlockedMoves::new(),
            unreachable: BTreeSet::new(),
            recovering: false,
            done: false,
        }
    }

    pub fn nav(&self) -> &NavMap {
        &self.nav
    }

    pub fn sem(&self) -> &SemanticMap {
        &self.sem
    }

    /// The agent's own pose estimate.
    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn target(&self) -> Option<&Target> {
        self.target.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn goal(&self) -> &str {
        &self.goal
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    /// Frontier anchors excluded after a failed plan.
    pub fn unreachable_anchors(&self) -> &BTreeSet<Cell> {
        &self.unreachable
    }

    fn update_pose(&mut self, obs: &Observation) {
        if self.cfg.use_gps || self.steps == 0 {
            let moved_cmd = self.last_action == Some(Action::MoveForward);
            if moved_cmd && self.cfg.use_gps {
                let prev = self.pose;
                if prev.distance_to(obs.pose.x, obs.pose.y) < 1e-9 {
                    self.note_collision(prev);
                }
            }
            self.pose = obs.pose;
            return;
        }
        if let Some(a) = self.last_action {
            let moved = match (&self.prev_scan, a) {
                (Some(prev), Action::MoveForward) => detect_motion(prev, &obs.scan).unwrap_or(true),
                _ => true,
            };
            if a == Action::MoveForward && !moved {
                let p = self.pose;
                self.note_collision(p);
            } else {
                self.pose = dead_reckon(&self.pose, a);
            }
        }
    }

    fn note_collision(&mut self, at: Pose) {
        self.blocked.insert((at.cell(&self.nav.spec), at.heading.index()));
        self.recovering = true;
    }

    /// Choose the next action.
    pub fn decide(&mut self, obs: &Observation) -> Decision {
        let decision = self.decide_inner(obs);
        self.prev_scan = Some(obs.scan.clone());
        self.last_action = Some(decision.action);
        self.steps += 1;
        if decision.action == Action::Stop {
            self.done = true;
        }
        decision
    }

    fn decision(&self, action: Action, mode: AgentMode) -> Decision {
        Decision {
            action,
            mode,
            choice: None,
            stop_reason: None,
            goal_detection: None,
        }
    }

    fn stop(&self, reason: StopReason) -> Decision {
        Decision {
            stop_reason: Some(reason),
            ..self.decision(Action::Stop, AgentMode::Done)
        }
    }

    fn decide_inner(&mut self, obs: &Observation) -> Decision {
        if self.done {
            return self.stop(StopReason::StepLimit);
        }
        self.update_pose(obs);
        self.poses.push(self.pose);
        self.nav.integrate_scan(&self.pose, &obs.scan);
        for d in &obs.detections {
            // malformed or long-range detections simply do not enter the map
            let _ = self.sem.project_detection(&self.pose, d, Some(&self.nav));
        }
        if self.steps + 1 >= self.cfg.max_steps {
            return self.stop(StopReason::StepLimit);
        }
        let goal_det = self.observe_goal(&obs.detections);
        if self.steps < LOOK_AROUND_STEPS {
            let mut d = self.decision(Action::RotateRight, AgentMode::LookAround);
            d.goal_detection = goal_det;
            return d;
        }
        if self.recovering {
            self.recovering = false;
            let mut d = self.decision(Action::RotateLeft, AgentMode::Recover);
            d.goal_detection = goal_det;
            return d;
        }

        let mut d = self.act();
        if d.goal_detection.is_none() {
            d.goal_detection = goal_det;
        }
        d
    }

    /// Update the goal target from this step's detections. Returns the
    /// detection committed to, if any.
    fn observe_goal(&mut self, dets: &[Detection]) -> Option<Detection> {
        let best = dets
            .iter()
            .filter(|d| d.kind == DetectionKind::Object && d.label == self.goal && d.confidence >= CONFIDENCE_THRESHOLD)
            .min_by(|a, b| a.range.total_cmp(&b.range))?;
        let a = (self.pose.heading.degrees() + best.bearing).to_radians();
        let (x, y) = (self.pose.x + best.range * a.cos(), self.pose.y + best.range * a.sin());
        let near = best.range <= SENSOR_RANGE_M;
        match (&self.target, near) {
            (Some(Target::GoalPoint { x: gx, y: gy }), true) => {
                // keep the closer of the two goal estimates
                if self.pose.distance_to(x, y) < self.pose.distance_to(*gx, *gy) {
                    self.target = Some(Target::GoalPoint { x, y });
                    return Some(best.clone());
                }
                None
            }
            (Some(Target::GoalPoint { .. }), false) => None,
            (_, true) => {
                self.target = Some(Target::GoalPoint { x, y });
                Some(best.clone())
            }
            (_, false) => {
                self.target = Some(Target::LongRangeHeading { x, y });
                Some(best.clone())
            }
        }
    }

    fn clamp_cell(&self, x: f64, y: f64) -> Cell {
        let c = self.nav.spec.cell_at(x, y);
        Cell::new(
            c.x.clamp(0, self.nav.spec.width as i32 - 1),
            c.y.clamp(0, self.nav.spec.height as i32 - 1),
        )
    }

    fn act(&mut self) -> Decision {
        // at most a few re-selections per step
        for _ in 0..4 {
            let here = self.pose.cell(&self.nav.spec);
            match self.target.clone() {
                Some(Target::GoalPoint { x, y }) => {
                    if self.pose.distance_to(x, y) <= self.cfg.stop_distance {
                        return self.stop(StopReason::GoalReached);
                    }
                    let cell = self.clamp_cell(x, y);
                    match plan_route(&self.nav, here, cell) {
                        Some(route) => match steer(&self.nav, &self.pose, &route, &self.blocked) {
                            Some(a) => return self.decision(a, AgentMode::GoalNav),
                            None => return self.stop(StopReason::GoalReached),
                        },
                        None => {
                            self.target = None;
                            continue;
                        }
                    }
                }
                Some(Target::LongRangeHeading { x, y }) => {
                    let cell = self.clamp_cell(x, y);
                    if here.chebyshev(cell) <= 1 {
                        self.target = None;
                        continue;
                    }
                    match plan_route(&self.nav, here, cell)
                        .and_then(|r| steer(&self.nav, &self.pose, &r, &self.blocked))
                    {
                        Some(a) => return self.decision(a, AgentMode::LongRange),
                        None => {
                            self.target = None;
                            continue;
                        }
                    }
                }
                Some(Target::Frontier { anchor, .. }) => {
                    let valid = !self.nav.get(anchor).eq(&CellState::Obstacle);
                    if !valid || here.chebyshev(anchor) <= 1 {
                        self.target = None;
                        continue;
                    }
                    match plan_route(&self.nav, here, anchor)
                        .and_then(|r| steer(&self.nav, &self.pose, &r, &self.blocked))
                    {
                        Some(a) => return self.decision(a, AgentMode::Explore),
                        None => {
                            self.unreachable.insert(anchor);
                            self.target = None;
                            continue;
                        }
                    }
                }
                None => match self.choose_frontier() {
                    Ok(choice) => {
                        let mut d = self.act_towards_frontier();
                        d.choice = Some(choice);
                        return d;
                    }
                    Err(_) => return self.stop(StopReason::ExplorationExhausted),
                },
            }
        }
        // repeated invalidation within one step: turn in place and retry next step
        self.decision(Action::RotateLeft, AgentMode::Explore)
    }

    fn act_towards_frontier(&mut self) -> Decision {
        let here = self.pose.cell(&self.nav.spec);
        if let Some(Target::Frontier { anchor, .. }) = self.target {
            if let Some(a) =
                plan_route(&self.nav, here, anchor).and_then(|r| steer(&self.nav, &self.pose, &r, &self.blocked))
            {
                return self.decision(a, AgentMode::Explore);
            }
            self.unreachable.insert(anchor);
            self.target = None;
        }
        self.decision(Action::RotateLeft, AgentMode::Explore)
    }

    /// Current frontiers minus those whose anchor failed to plan.
    pub fn candidate_frontiers(&self) -> Vec<Frontier> {
        extract_frontiers(&self.nav, self.cfg.min_frontier_size)
            .into_iter()
            .filter(|f| !self.unreachable.contains(&f.anchor(&self.nav)))
            .collect()
    }

    fn choose_frontier(&mut self) -> Result<FrontierChoice, PolicyError> {
        let frontiers = self.candidate_frontiers();
        if frontiers.is_empty() {
            return Err(PolicyError::NoFrontiers);
        }
        let program = build_grounding(
            &self.goal,
            &frontiers,
            &self.sem,
            &self.nav,
            &self.pose,
            &self.scores,
            &self.cfg,
        )?;
        let sel = select_frontier(&program, &self.cfg)?;
        let f = &program.frontiers[sel.index];
        let anchor = f.anchor(&self.nav);
        self.target = Some(Target::Frontier {
            id: f.id,
            anchor,
            centroid: f.centroid,
        });
        Ok(FrontierChoice {
            frontier_id: f.id,
            anchor,
            centroid: f.centroid,
            energy: sel.energy,
            solve_secs: sel.solve_secs,
            candidates: program
                .frontiers
                .iter()
                .map(|f| f.id)
                .zip(program.distances.iter().copied())
                .collect(),
            threshold_waived: program.threshold_waived,
        })
    }
}
