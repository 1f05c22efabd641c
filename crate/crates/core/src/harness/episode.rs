//! One episode: simulator, detector and agent in lockstep.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, DistanceField, RayWalk};
use crate::metrics::{is_stuck, ChosenFrontier, EpisodeRecord};
use crate::perception::{detect, RoomSighting, Vocabulary};
use crate::policy::{Agent, AgentMode, CooccurScores, Decision, Observation, StopReason};
use crate::world::{
    check_success, goal_distance_field, line_of_sight, ray_bearings, render_depth, step, visible_instances_within,
    Action, Episode, GridWorld, Pose, Room, Visible, SENSOR_RANGE_M,
};

use super::RunConfig;

/// One line of the per-step trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub episode_id: usize,
    pub goal: String,
    pub step: usize,
    /// Ground-truth pose the step was observed from.
    pub pose: Pose,
    pub action: Action,
    pub mode: AgentMode,
    pub chosen_frontier: Option<usize>,
    pub frontier_centroid: Option<(f64, f64)>,
    pub solver_energy: Option<f64>,
}

/// Wall-clock timing, kept apart from the records so those stay
/// reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTiming {
    pub episode_id: usize,
    pub steps: usize,
    pub decide_secs_total: f64,
    pub decide_secs_max: f64,
    pub solve_secs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRun {
    pub record: EpisodeRecord,
    pub timing: EpisodeTiming,
    pub trace: Vec<TraceStep>,
}

/// What a step hook sees after the agent decided.
pub struct StepView<'a> {
    pub step: usize,
    pub pose: Pose,
    pub observation: &'a Observation,
    pub agent: &'a Agent,
    pub decision: &'a Decision,
}

/// Sense from `pose`: depth, the visible set out to `long_range_m`, and the
/// detector's output. Returns the observation and the ground-truth visible
/// set.
pub fn observe(
    world: &GridWorld,
    pose: &Pose,
    vocab: &Vocabulary,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> (Observation, Vec<Visible>) {
    let scan = render_depth(world, pose);
    let visible = visible_instances_within(world, pose, cfg.long_range_m);
    let room = world.room_at(pose.cell(&world.spec)).map(|r| {
        let depth = scan.range_at(0.0).unwrap_or(SENSOR_RANGE_M);
        RoomSighting {
            label: r.label.clone(),
            range: room_extent(world, r, pose).min(depth),
        }
    });
    let detections = detect(&visible, room.as_ref(), vocab, &cfg.noise, rng);
    (
        Observation {
            pose: *pose,
            scan,
            detections,
        },
        visible,
    )
}

/// Distance at which some ray of the field of view first leaves `room`
/// through an opening rather than a wall.
fn room_extent(world: &GridWorld, room: &Room, pose: &Pose) -> f64 {
    let mut extent = SENSOR_RANGE_M;
    for b in ray_bearings() {
        let a = (pose.heading.degrees() + b).to_radians();
        for rc in RayWalk::new(&world.spec, (pose.x, pose.y), a, extent) {
            if world.is_occupied(rc.cell) {
                break;
            }
            if !room.contains(rc.cell) {
                extent = extent.min(rc.t_enter);
                break;
            }
        }
    }
    extent
}

/// Path length to the nearest goal instance: the straight segment when it
/// is in line of sight, else the grid geodesic.
fn distance_to_goal(world: &GridWorld, field: &DistanceField, goal: &str, pose: &Pose) -> f64 {
    let grid = field.at(pose.cell(&world.spec)) * world.spec.resolution;
    world
        .instances_of(goal)
        .filter_map(|o| {
            let (x, y) = world.spec.center(o.position);
            line_of_sight(world, (pose.x, pose.y), (x, y)).then(|| pose.distance_to(x, y))
        })
        .fold(grid, f64::min)
}

fn frontier_goal_distance(world: &GridWorld, field: &DistanceField, centroid: (f64, f64), anchor: Cell) -> f64 {
    let d = field.at(world.spec.cell_at(centroid.0, centroid.1));
    let d = if d.is_finite() { d } else { field.at(anchor) };
    d * world.spec.resolution
}

pub fn run_episode(
    world: &GridWorld,
    ep: &Episode,
    scores: &CooccurScores,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> EpisodeRun {
    run_episode_with(world, ep, scores, vocab, cfg, |_| {})
}

/// [`run_episode`] with a hook called after every decision.
pub fn run_episode_with(
    world: &GridWorld,
    ep: &Episode,
    scores: &CooccurScores,
    vocab: &Vocabulary,
    cfg: &RunConfig,
    mut hook: impl FnMut(StepView<'_>),
) -> EpisodeRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
    rng.set_stream(ep.id as u64);
    let goal = ep.goal.as_str();
    let field = goal_distance_field(world, goal);
    let goal_ids: BTreeSet<u32> = world.instances_of(goal).map(|o| o.id).collect();
    let is_goal = |id: Option<u32>| id.is_some_and(|i| goal_ids.contains(&i));

    let mut agent = Agent::new(cfg.policy.clone(), world.spec, goal, scores.clone(), ep.start_pose);
    let mut pose = ep.start_pose;
    let mut positions = Vec::new();
    let mut chosen = Vec::new();
    let mut trace = Vec::new();
    let mut timing = EpisodeTiming {
        episode_id: ep.id,
        steps: 0,
        decide_secs_total: 0.0,
        decide_secs_max: 0.0,
        solve_secs: Vec::new(),
    };
    let (mut saw, mut detected, mut false_acted) = (false, false, false);
    let mut path_length = 0.0;
    let mut actions = 0;
    let mut stop_reason = None;

    for k in 0..cfg.policy.max_steps.max(1) {
        let (obs, visible) = observe(world, &pose, vocab, cfg, &mut rng);
        saw |= visible.iter().any(|v| goal_ids.contains(&v.instance.id));
        detected |= obs
            .detections
            .iter()
            .any(|d| d.label == goal && is_goal(d.true_instance));
        positions.push((pose.x, pose.y));

        let t = Instant::now();
        let decision = agent.decide(&obs);
        let secs = t.elapsed().as_secs_f64();
        timing.steps += 1;
        timing.decide_secs_total += secs;
        timing.decide_secs_max = timing.decide_secs_max.max(secs);
        actions += 1;

        if let Some(d) = &decision.goal_detection {
            false_acted |= !is_goal(d.true_instance);
        }
        if let Some(c) = &decision.choice {
            chosen.push(ChosenFrontier {
                step: k,
                centroid: c.centroid,
                goal_distance: frontier_goal_distance(world, &field, c.centroid, c.anchor),
            });
            timing.solve_secs.push(c.solve_secs);
        }
        if cfg.trace {
            trace.push(TraceStep {
                episode_id: ep.id,
                goal: ep.goal.clone(),
                step: k,
                pose,
                action: decision.action,
                mode: decision.mode,
                chosen_frontier: decision.choice.as_ref().map(|c| c.frontier_id),
                frontier_centroid: decision.choice.as_ref().map(|c| c.centroid),
                solver_energy: decision.choice.as_ref().map(|c| c.energy),
            });
        }
        hook(StepView {
            step: k,
            pose,
            observation: &obs,
            agent: &agent,
            decision: &decision,
        });
        if decision.action == Action::Stop {
            stop_reason = Some(decision.stop_reason.unwrap_or(StopReason::StepLimit));
            break;
        }
        let (next, _) = step(world, pose, decision.action);
        path_length += pose.distance_to(next.x, next.y);
        pose = next;
    }

    // running out of steps ends the episode but is not the agent's Stop
    let stopped = stop_reason.is_some_and(|r| r != StopReason::StepLimit);
    let record = EpisodeRecord {
        episode_id: ep.id,
        world_id: ep.world_id,
        goal: ep.goal.clone(),
        success: stopped && check_success(world, &pose, goal, cfg.success_distance),
        path_length,
        shortest: ep.shortest_geodesic,
        initial_distance: distance_to_goal(world, &field, goal, &ep.start_pose),
        final_distance: distance_to_goal(world, &field, goal, &pose),
        chosen_frontiers: chosen,
        ever_saw_goal: saw,
        ever_detected_goal: detected,
        false_goal_detection_acted: false_acted,
        stuck: is_stuck(&positions),
        actions,
        stop_reason: Some(stop_reason.unwrap_or(StopReason::StepLimit)),
    };
    EpisodeRun { record, timing, trace }
}
