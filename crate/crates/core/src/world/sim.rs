use crate::grid::{dijkstra, segment_cells, Cell, DistanceField, GridSpec, RayWalk};

use super::{
    wrap_degrees, Action, DepthScan, GridWorld, ObjectInstance, Pose, RayHit, AGENT_RADIUS_M, HFOV_DEG, N_RAYS,
    SENSOR_RANGE_M, STEP_M,
};

/// Whether a disc of radius `r` centred at `(x, y)` avoids every occupied cell.
pub fn disc_is_clear(world: &GridWorld, x: f64, y: f64, r: f64) -> bool {
    let spec = &world.spec;
    let lo = spec.cell_at(x - r, y - r);
    let hi = spec.cell_at(x + r, y + r);
    let res = spec.resolution;
    for cy in lo.y..=hi.y {
        for cx in lo.x..=hi.x {
            let c = Cell::new(cx, cy);
            if !world.is_occupied(c) {
                continue;
            }
            let (x0, y0) = (cx as f64 * res, cy as f64 * res);
            let nx = x.clamp(x0, x0 + res);
            let ny = y.clamp(y0, y0 + res);
            if (x - nx).hypot(y - ny) < r {
                return false;
            }
        }
    }
    true
}

/// Advance the agent by one action. A forward move whose swept disc would
/// touch an occupied cell leaves the pose unchanged and reports a collision.
pub fn step(world: &GridWorld, pose: Pose, action: Action) -> (Pose, bool) {
    match action {
        Action::MoveForward => {
            let a = pose.heading.radians();
            let (dx, dy) = (a.cos() * STEP_M, a.sin() * STEP_M);
            const SAMPLES: usize = 8;
            for k in 1..=SAMPLES {
                let f = k as f64 / SAMPLES as f64;
                if !disc_is_clear(world, pose.x + dx * f, pose.y + dy * f, AGENT_RADIUS_M) {
                    return (pose, true);
                }
            }
            (Pose::new(pose.x + dx, pose.y + dy, pose.heading), false)
        }
        Action::RotateLeft => (Pose::new(pose.x, pose.y, pose.heading.left()), false),
        Action::RotateRight => (Pose::new(pose.x, pose.y, pose.heading.right()), false),
        Action::LookUp | Action::LookDown | Action::Stop => (pose, false),
    }
}

/// Range to the first occupied cell along an absolute angle, capped at `max`.
pub(crate) fn cast(world: &GridWorld, origin: (f64, f64), angle_rad: f64, max: f64) -> (f64, RayHit) {
    for rc in RayWalk::new(&world.spec, origin, angle_rad, max) {
        if world.is_occupied(rc.cell) {
            return (rc.t_enter, RayHit::Obstacle);
        }
    }
    (max, RayHit::MaxRange)
}

pub fn ray_bearings() -> Vec<f64> {
    let half = (N_RAYS as f64 - 1.0) / 2.0;
    (0..N_RAYS).map(|i| i as f64 - half).collect()
}

/// 79 rays at 1° spacing centred on the heading.
pub fn render_depth(world: &GridWorld, pose: &Pose) -> DepthScan {
    let bearings = ray_bearings();
    let mut ranges = Vec::with_capacity(N_RAYS);
    let mut hits = Vec::with_capacity(N_RAYS);
    for &b in &bearings {
        let (r, h) = cast(
            world,
            (pose.x, pose.y),
            (pose.heading.degrees() + b).to_radians(),
            SENSOR_RANGE_M,
        );
        ranges.push(r);
        hits.push(h);
    }
    DepthScan { bearings, ranges, hits }
}

/// Whether the straight segment between two points crosses an occupied cell.
pub fn line_of_sight(world: &GridWorld, a: (f64, f64), b: (f64, f64)) -> bool {
    segment_cells(&world.spec, a, b)
        .into_iter()
        .all(|c| !world.is_occupied(c))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Visible {
    pub instance: ObjectInstance,
    pub range: f64,
    /// Degrees relative to the heading, positive to the left.
    pub bearing: f64,
}

fn unoccluded_within(world: &GridWorld, pose: &Pose, o: &ObjectInstance, max_range: f64) -> Option<(f64, f64)> {
    let (ox, oy) = world.spec.center(o.position);
    let range = pose.distance_to(ox, oy);
    if range > max_range || !line_of_sight(world, (pose.x, pose.y), (ox, oy)) {
        return None;
    }
    let bearing = if range < 1e-9 {
        0.0
    } else {
        wrap_degrees((oy - pose.y).atan2(ox - pose.x).to_degrees() - pose.heading.degrees())
    };
    Some((range, bearing))
}

/// Object instances inside the field of view, within sensor range and with
/// an unobstructed line of sight.
pub fn visible_instances(world: &GridWorld, pose: &Pose) -> Vec<Visible> {
    visible_instances_within(world, pose, SENSOR_RANGE_M)
}

pub fn visible_instances_within(world: &GridWorld, pose: &Pose, max_range: f64) -> Vec<Visible> {
    world
        .objects
        .iter()
        .filter_map(|o| {
            let (range, bearing) = unoccluded_within(world, pose, o, max_range)?;
            (bearing.abs() <= HFOV_DEG / 2.0).then(|| Visible {
                instance: o.clone(),
                range,
                bearing,
            })
        })
        .collect()
}

/// Success test after Stop: some goal instance within `success_distance`
/// with a clear line of sight. Heading is ignored.
pub fn check_success(world: &GridWorld, pose: &Pose, goal: &str, success_distance: f64) -> bool {
    world
        .instances_of(goal)
        .any(|o| unoccluded_within(world, pose, o, success_distance.min(SENSOR_RANGE_M)).is_some())
}

/// Shortest 8-connected path length in meters over `passable` cells from
/// `from` to the nearest member of `to`; infinity when unreachable.
pub fn geodesic_distance<F>(spec: &GridSpec, passable: F, from: Cell, to: &[Cell]) -> f64
where
    F: Fn(Cell) -> bool,
{
    if !passable(from) {
        return f64::INFINITY;
    }
    let to: Vec<Cell> = to.iter().copied().filter(|&c| passable(c)).collect();
    if to.contains(&from) {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    // reverse search from the target set so the stop cell is `from`
    let field = dijkstra(spec, &to, |c| passable(c).then_some(1.0), Some(from));
    field.at(from) * spec.resolution
}

/// Distance field (cell units) from all instances of `goal` over free cells.
pub fn goal_distance_field(world: &GridWorld, goal: &str) -> DistanceField {
    let sources: Vec<Cell> = world.instances_of(goal).map(|o| o.position).collect();
    dijkstra(&world.spec, &sources, |c| (!world.is_occupied(c)).then_some(1.0), None)
}
