//! Grid planner on the agent's map and a heading controller that turns a
//! route into discrete actions.

use std::collections::BTreeSet;

use crate::grid::{dijkstra, Cell};
use crate::mapping::{CellState, NavMap};
use crate::world::{wrap_degrees, Action, Heading, Pose, AGENT_RADIUS_M, STEP_M, TURN_DEG};

use super::PolicyError;

/// Cost multiplier for entering an unknown cell.
pub const UNKNOWN_COST: f64 = 3.0;
/// Extra cost for cells whose centre is too close to a known obstacle for
/// the agent's footprint.
const WALL_PENALTY: f64 = 9.0;
const CORNER_PENALTY: f64 = 2.0;

/// Entry cost of a cell for planning; `None` for known obstacles.
pub fn planner_cost(nav: &NavMap, c: Cell) -> Option<f64> {
    let base = match nav.get(c) {
        CellState::Obstacle => return None,
        CellState::Free => 1.0,
        CellState::Unknown => UNKNOWN_COST,
    };
    let obstacle = |n: Cell| nav.get(n) == CellState::Obstacle;
    if c.neighbors4().into_iter().any(obstacle) {
        Some(base + WALL_PENALTY)
    } else if c.neighbors8().into_iter().any(obstacle) {
        Some(base + CORNER_PENALTY)
    } else {
        Some(base)
    }
}

/// Cheapest 8-connected route from `from` to `to`, both inclusive.
pub fn plan_route(nav: &NavMap, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    if from == to {
        return Some(vec![from]);
    }
    if nav.get(to) == CellState::Obstacle {
        return None;
    }
    let field = dijkstra(&nav.spec, &[from], |c| planner_cost(nav, c), Some(to));
    field.path_to(to)
}

/// Whether the agent's disc centred at `(x, y)` avoids known obstacles.
pub fn disc_clear_on_map(nav: &NavMap, x: f64, y: f64) -> bool {
    let spec = &nav.spec;
    let r = AGENT_RADIUS_M;
    let lo = spec.cell_at(x - r, y - r);
    let hi = spec.cell_at(x + r, y + r);
    let res = spec.resolution;
    for cy in lo.y..=hi.y {
        for cx in lo.x..=hi.x {
            if nav.get(Cell::new(cx, cy)) != CellState::Obstacle {
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

/// Whether a forward step along `heading` stays clear of known obstacles.
pub fn forward_clear_on_map(nav: &NavMap, pose: &Pose, heading: Heading) -> bool {
    let a = heading.radians();
    (1..=4).all(|k| {
        let f = k as f64 / 4.0 * STEP_M;
        disc_clear_on_map(nav, pose.x + a.cos() * f, pose.y + a.sin() * f)
    })
}

/// Forward moves known to fail: (cell, heading index).
pub type BlockedMoves = BTreeSet<(Cell, u8)>;

/// Next action along `route` (which starts at the agent's cell).
///
/// Aims at the route cell two steps ahead. Moves forward when the heading is
/// within half a turn of that bearing, otherwise rotates toward the closest
/// heading whose forward step is not known to be blocked. Returns `None`
/// when the route has no cell left to reach.
pub fn steer(nav: &NavMap, pose: &Pose, route: &[Cell], blocked: &BlockedMoves) -> Option<Action> {
    if route.len() < 2 {
        return None;
    }
    let aim = route[2.min(route.len() - 1)];
    let (tx, ty) = nav.spec.center(aim);
    let desired = (ty - pose.y).atan2(tx - pose.x).to_degrees();
    let here = pose.cell(&nav.spec);
    let usable = |h: Heading| forward_clear_on_map(nav, pose, h) && !blocked.contains(&(here, h.index()));
    let mut order: Vec<Heading> = (0..Heading::COUNT).map(Heading::new).collect();
    order.sort_by(|a, b| {
        let da = wrap_degrees(a.degrees() - desired).abs();
        let db = wrap_degrees(b.degrees() - desired).abs();
        da.total_cmp(&db).then(a.index().cmp(&b.index()))
    });
    let best = order.into_iter().find(|&h| usable(h));
    let Some(best) = best else {
        return Some(Action::RotateLeft);
    };
    if best == pose.heading {
        return Some(Action::MoveForward);
    }
    let diff = wrap_degrees(best.degrees() - pose.heading.degrees());
    Some(if diff > 0.0 {
        Action::RotateLeft
    } else {
        Action::RotateRight
    })
}

/// Kinematic update without collision checking.
pub fn dead_reckon(pose: &Pose, action: Action) -> Pose {
    match action {
        Action::MoveForward => {
            let a = pose.heading.radians();
            Pose::new(pose.x + a.cos() * STEP_M, pose.y + a.sin() * STEP_M, pose.heading)
        }
        Action::RotateLeft => Pose::new(pose.x, pose.y, pose.heading.left()),
        Action::RotateRight => Pose::new(pose.x, pose.y, pose.heading.right()),
        _ => *pose,
    }
}

/// Full open-loop action sequence that brings the agent into cell `to`,
/// replanning after every simulated action on the (fixed) map.
pub fn plan_path(nav: &NavMap, from: &Pose, to: Cell) -> Result<Vec<Action>, PolicyError> {
    let first = plan_route(nav, from.cell(&nav.spec), to).ok_or(PolicyError::Unreachable(to))?;
    let budget = 4 * first.len() + 4 * (360.0 / TURN_DEG) as usize;
    let blocked = BlockedMoves::new();
    let mut pose = *from;
    let mut out = Vec::new();
    while pose.cell(&nav.spec) != to {
        if out.len() >= budget {
            return Err(PolicyError::Unreachable(to));
        }
        let route = plan_route(nav, pose.cell(&nav.spec), to).ok_or(PolicyError::Unreachable(to))?;
        let Some(a) = steer(nav, &pose, &route, &blocked) else {
            break;
        };
        out.push(a);
        pose = dead_reckon(&pose, a);
    }
    Ok(out)
}
