//! Rebuild the agent's map at a traced step and render it.

use std::collections::BTreeSet;

use crate::grid::Cell;
use crate::mapping::{label_color, pgm_bytes, CellState, NavMap, Rgb, RgbImage};
use crate::world::{check_success, render_depth, visible_instances, Action, GridWorld, DEFAULT_SUCCESS_DISTANCE_M};

use super::episode::TraceStep;
use super::HarnessError;

const PATH: Rgb = [40, 90, 220];
const FRONTIER: Rgb = [30, 170, 60];
const GOAL: Rgb = [220, 40, 200];
const AGENT: Rgb = [230, 30, 30];

/// Marker positions drawn on the overlay.
#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub agent: Cell,
    pub path: Vec<Cell>,
    pub frontier: Option<Cell>,
    pub goals: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapImages {
    /// Occupancy map, binary PGM.
    pub pgm: Vec<u8>,
    /// Room-tinted occupancy with markers, binary PPM.
    pub ppm: Vec<u8>,
    pub overlay: Overlay,
}

fn blob(img: &mut RgbImage, c: Cell, rgb: Rgb) {
    for dy in -1..=1 {
        for dx in -1..=1 {
            img.set(c.offset(dx, dy), rgb);
        }
    }
}

/// Render episode `episode` as the agent knew it after observing `step`.
///
/// The occupancy map is rebuilt by replaying the traced ground-truth poses
/// through the depth sensor, which reproduces the agent's map exactly when
/// it runs with GPS. Goal markers appear for goal instances seen so far, and
/// on the final step of a successful episode.
pub fn export_map(
    trace: &[TraceStep],
    world: &GridWorld,
    episode: usize,
    step: usize,
) -> Result<MapImages, HarnessError> {
    let mut steps: Vec<&TraceStep> = trace.iter().filter(|t| t.episode_id == episode).collect();
    steps.sort_by_key(|t| t.step);
    let (Some(first), Some(last)) = (steps.first(), steps.last()) else {
        return Err(HarnessError::MissingEpisode(episode));
    };
    if step < first.step || step > last.step {
        return Err(HarnessError::StepOutOfRange {
            episode,
            step,
            first: first.step,
            last: last.step,
        });
    }
    let upto: Vec<&TraceStep> = steps.iter().copied().take_while(|t| t.step <= step).collect();
    let spec = world.spec;
    let mut nav = NavMap::new(spec);
    let mut seen_goals = BTreeSet::new();
    for t in &upto {
        nav.integrate_scan(&t.pose, &render_depth(world, &t.pose));
        for v in visible_instances(world, &t.pose) {
            if v.instance.category == t.goal {
                seen_goals.insert(v.instance.position);
            }
        }
    }
    let now = *upto.last().expect("step within range");
    if now.step == last.step
        && now.action == Action::Stop
        && check_success(world, &now.pose, &now.goal, DEFAULT_SUCCESS_DISTANCE_M)
    {
        seen_goals.extend(world.instances_of(&now.goal).map(|o| o.position));
    }

    let mut img = RgbImage::from_navmap(&nav);
    for c in spec.cells().collect::<Vec<_>>() {
        if nav.get(c) == CellState::Free {
            if let Some(label) = world.room_label_at(c) {
                img.tint(c, label_color(label));
            }
        }
    }
    let mut path = Vec::new();
    for t in &upto {
        let c = t.pose.cell(&spec);
        if path.last() != Some(&c) {
            path.push(c);
        }
        img.set(c, PATH);
    }
    let frontier = upto
        .iter()
        .rev()
        .find_map(|t| t.frontier_centroid)
        .map(|(x, y)| spec.cell_at(x, y));
    if let Some(f) = frontier {
        blob(&mut img, f, FRONTIER);
    }
    let goals: Vec<Cell> = seen_goals.into_iter().collect();
    for &g in &goals {
        blob(&mut img, g, GOAL);
    }
    let agent = now.pose.cell(&spec);
    blob(&mut img, agent, AGENT);
    let a = now.pose.heading.radians();
    img.set(
        spec.cell_at(now.pose.x + 0.5 * a.cos(), now.pose.y + 0.5 * a.sin()),
        AGENT,
    );
    Ok(MapImages {
        pgm: pgm_bytes(&nav),
        ppm: img.to_ppm(),
        overlay: Overlay {
            agent,
            path,
            frontier,
            goals,
        },
    })
}
