//! Procedural houses: rectangular rooms joined by door gaps, either by
//! binary space partition or strung along a central corridor, with objects
//! placed from per-(object, room) priors.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridSpec};

use super::sim::geodesic_distance;
use super::{Episode, GridWorld, Heading, ObjectInstance, Pose, Room, WorldError};

/// object label -> room label -> placement probability.
pub type RoomPriors = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Recursive splits with one door per split wall; rooms open into each
    /// other.
    #[default]
    Partition,
    /// An unlabeled corridor across the house with every room opening onto
    /// it through one door.
    Corridor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenConfig {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// Inclusive range of room counts.
    pub room_count: (usize, usize),
    /// Minimum side length of a room interior, in cells.
    pub min_room_cells: usize,
    pub door_width: usize,
    pub rooms: Vec<String>,
    /// Relative sampling weights for room labels; missing labels weigh 1.
    pub room_weights: BTreeMap<String, f64>,
    pub objects: Vec<String>,
    pub priors: RoomPriors,
    pub max_instances_per_room: usize,
    pub layout: Layout,
    /// Corridor width in cells, for [`Layout::Corridor`].
    pub corridor_cells: usize,
}

impl Default for WorldGenConfig {
    fn default() -> Self {
        Self::household()
    }
}

fn priors(rows: &[(&str, &[(&str, f64)])]) -> RoomPriors {
    rows.iter()
        .map(|(o, rs)| (o.to_string(), rs.iter().map(|(r, p)| (r.to_string(), *p)).collect()))
        .collect()
}

impl WorldGenConfig {
    /// Multi-room houses with strong room-object regularities.
    pub fn household() -> Self {
        let rooms = [
            "bedroom",
            "living room",
            "bathroom",
            "kitchen",
            "dining room",
            "office room",
            "gym",
            "lounge",
            "laundry room",
        ];
        let p = priors(&[
            ("bed", &[("bedroom", 0.95)]),
            ("toilet", &[("bathroom", 0.95)]),
            ("sofa", &[("living room", 0.9), ("lounge", 0.6)]),
            (
                "tv_monitor",
                &[("living room", 0.8), ("lounge", 0.3), ("bedroom", 0.15)],
            ),
            ("plant", &[("living room", 0.4), ("lounge", 0.6), ("office room", 0.3)]),
            (
                "chair",
                &[("dining room", 0.9), ("office room", 0.85), ("kitchen", 0.2)],
            ),
            ("sink", &[("bathroom", 0.9), ("kitchen", 0.8), ("laundry room", 0.4)]),
            ("towel", &[("bathroom", 0.8), ("laundry room", 0.3)]),
            ("shower", &[("bathroom", 0.6)]),
            ("bathtub", &[("bathroom", 0.5)]),
            ("counter", &[("kitchen", 0.9)]),
            ("cabinet", &[("kitchen", 0.8), ("bathroom", 0.3), ("laundry room", 0.4)]),
            (
                "table",
                &[("dining room", 0.95), ("kitchen", 0.4), ("office room", 0.3)],
            ),
            ("chest_of_drawers", &[("bedroom", 0.8)]),
            ("cushion", &[("living room", 0.7), ("lounge", 0.6), ("bedroom", 0.3)]),
            ("stool", &[("kitchen", 0.5), ("lounge", 0.2)]),
            (
                "picture",
                &[("living room", 0.4), ("dining room", 0.3), ("bedroom", 0.3)],
            ),
            ("fireplace", &[("living room", 0.3), ("lounge", 0.3)]),
            ("gym_equipment", &[("gym", 0.95)]),
            ("seating", &[("lounge", 0.5), ("gym", 0.2)]),
            ("clothes", &[("laundry room", 0.9), ("bedroom", 0.4)]),
        ]);
        Self {
            width: 80,
            height: 80,
            resolution: 0.25,
            room_count: (7, 9),
            min_room_cells: 14,
            door_width: 4,
            rooms: rooms.iter().map(|s| s.to_string()).collect(),
            room_weights: BTreeMap::new(),
            objects: p.keys().cloned().collect(),
            priors: p,
            max_instances_per_room: 2,
            layout: Layout::Corridor,
            corridor_cells: 6,
        }
    }

    pub fn prior(&self, object: &str, room: &str) -> f64 {
        self.priors
            .get(object)
            .and_then(|m| m.get(room))
            .copied()
            .unwrap_or(0.0)
    }

    fn check(&self) -> Result<(), WorldError> {
        let (lo, hi) = self.room_count;
        if lo == 0 || lo > hi {
            return Err(WorldError::Infeasible(format!(
                "room_count range ({lo}, {hi}) is empty"
            )));
        }
        if self.rooms.is_empty() {
            return Err(WorldError::Infeasible("room vocabulary is empty".into()));
        }
        if self.door_width == 0 || self.min_room_cells < self.door_width + 2 {
            return Err(WorldError::Infeasible(format!(
                "min_room_cells {} must be at least door_width + 2 = {}",
                self.min_room_cells,
                self.door_width + 2
            )));
        }
        if self.width < self.min_room_cells + 2 || self.height < self.min_room_cells + 2 {
            return Err(WorldError::Infeasible(format!(
                "grid {}x{} cannot hold a single room of side {}",
                self.width, self.height, self.min_room_cells
            )));
        }
        if self.layout == Layout::Corridor && self.corridor_cells < self.door_width {
            return Err(WorldError::Infeasible(format!(
                "corridor_cells {} must be at least door_width {}",
                self.corridor_cells, self.door_width
            )));
        }
        if !(self.resolution > 0.0) {
            return Err(WorldError::Infeasible("resolution must be positive".into()));
        }
        for (o, m) in &self.priors {
            for (r, p) in m {
                if !(0.0..=1.0).contains(p) {
                    return Err(WorldError::Infeasible(format!("prior ({o}, {r}) = {p} outside [0, 1]")));
                }
                if !self.rooms.contains(r) {
                    return Err(WorldError::Infeasible(format!(
                        "prior ({o}, {r}) names an unknown room"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: i32,
    y0: i32,
    x1: i32,
    y1: i32,
}

impl Rect {
    fn w(&self) -> i32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

/// Door opening in a wall; `vertical` walls have constant x.
#[derive(Clone, Copy, Debug)]
struct Door {
    vertical: bool,
    at: i32,
    lo: i32,
    hi: i32,
}

/// Split positions along one axis for `r` that keep both halves at least
/// `min` wide and do not land inside a door on the rect's boundary.
fn split_positions(r: &Rect, vertical: bool, min: i32, doors: &[Door]) -> Vec<i32> {
    let (lo, hi) = if vertical { (r.x0, r.x1) } else { (r.y0, r.y1) };
    (lo + min..=hi - min)
        .filter(|&c| {
            !doors.iter().any(|d| {
                // doors on the two walls the new wall would abut
                let abuts = if vertical {
                    !d.vertical && (d.at == r.y0 - 1 || d.at == r.y1 + 1)
                } else {
                    d.vertical && (d.at == r.x0 - 1 || d.at == r.x1 + 1)
                };
                abuts && c >= d.lo && c <= d.hi
            })
        })
        .collect()
}

/// Rooms, unlabeled open areas and door cells of one house.
struct Plan {
    rooms: Vec<Rect>,
    open: Vec<Rect>,
    doors: Vec<Cell>,
}

fn partition_plan(config: &WorldGenConfig, target: usize, rng: &mut ChaCha8Rng) -> Result<Plan, WorldError> {
    let min = config.min_room_cells as i32;
    let dw = config.door_width as i32;
    let mut rects = vec![Rect {
        x0: 1,
        y0: 1,
        x1: config.width as i32 - 2,
        y1: config.height as i32 - 2,
    }];
    let mut doors: Vec<Door> = Vec::new();
    while rects.len() < target {
        let mut order: Vec<usize> = (0..rects.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(rects[i].w() * rects[i].h()), i));
        let mut done = false;
        for i in order {
            let r = rects[i];
            let prefer_vertical = r.w() >= r.h();
            for vertical in [prefer_vertical, !prefer_vertical] {
                let cands = split_positions(&r, vertical, min, &doors);
                let Some(&c) = cands.choose(rng) else { continue };
                let (a, b, span) = if vertical {
                    (Rect { x1: c - 1, ..r }, Rect { x0: c + 1, ..r }, (r.y0, r.y1))
                } else {
                    (Rect { y1: c - 1, ..r }, Rect { y0: c + 1, ..r }, (r.x0, r.x1))
                };
                let start = rng.gen_range(span.0 + 1..=span.1 - dw);
                doors.push(Door {
                    vertical,
                    at: c,
                    lo: start,
                    hi: start + dw - 1,
                });
                rects[i] = a;
                rects.push(b);
                done = true;
                break;
            }
            if done {
                break;
            }
        }
        if !done {
            return Err(WorldError::Infeasible(format!(
                "cannot fit {target} rooms of side >= {min} cells in a {}x{} grid (stopped at {})",
                config.width,
                config.height,
                rects.len()
            )));
        }
    }
    let doors = doors
        .iter()
        .flat_map(|d| {
            (d.lo..=d.hi).map(move |k| {
                if d.vertical {
                    Cell::new(d.at, k)
                } else {
                    Cell::new(k, d.at)
                }
            })
        })
        .collect();
    Ok(Plan {
        rooms: rects,
        open: Vec::new(),
        doors,
    })
}

/// Random widths of `k` rooms of at least `min` cells separated by
/// one-cell walls across `span` cells.
fn strip_widths(span: i32, k: i32, min: i32, rng: &mut ChaCha8Rng) -> Option<Vec<i32>> {
    let slack = span - k * min - (k - 1);
    if k < 1 || slack < 0 {
        return None;
    }
    let mut cuts: Vec<i32> = (0..k - 1).map(|_| rng.gen_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut widths = Vec::with_capacity(k as usize);
    let mut prev = 0;
    for c in cuts.into_iter().chain([slack]) {
        widths.push(min + c - prev);
        prev = c;
    }
    Some(widths)
}

fn corridor_plan(config: &WorldGenConfig, target: usize, rng: &mut ChaCha8Rng) -> Result<Plan, WorldError> {
    let (w, h) = (config.width as i32, config.height as i32);
    let min = config.min_room_cells as i32;
    let dw = config.door_width as i32;
    let cw = config.corridor_cells as i32;
    // rows: outer wall, lower rooms, wall, corridor, wall, upper rooms, outer wall
    let lo = min + 2;
    let hi = h - cw - 2 - min;
    if lo > hi {
        return Err(WorldError::Infeasible(format!(
            "a {w}x{h} grid cannot hold a {cw}-cell corridor between rooms of side >= {min}"
        )));
    }
    let mid = (h - cw) / 2;
    let cy0 = rng.gen_range((mid - 2).clamp(lo, hi)..=(mid + 2).clamp(lo, hi));
    let cy1 = cy0 + cw - 1;
    let n = target as i32;
    let lower = n / 2 + if n % 2 == 1 && rng.gen::<bool>() { 1 } else { 0 };
    let mut rooms = Vec::new();
    let mut doors = Vec::new();
    for (k, y0, y1, wall) in [(lower, 1, cy0 - 2, cy0 - 1), (n - lower, cy1 + 2, h - 2, cy1 + 1)] {
        if k == 0 {
            continue;
        }
        let widths = strip_widths(w - 2, k, min, rng).ok_or_else(|| {
            WorldError::Infeasible(format!(
                "cannot fit {target} rooms of side >= {min} cells along a {w}-cell corridor"
            ))
        })?;
        let mut x0 = 1;
        for rw in widths {
            let r = Rect {
                x0,
                y0,
                x1: x0 + rw - 1,
                y1,
            };
            let start = rng.gen_range(r.x0 + 1..=r.x1 - dw);
            doors.extend((start..start + dw).map(|x| Cell::new(x, wall)));
            rooms.push(r);
            x0 += rw + 1;
        }
    }
    Ok(Plan {
        rooms,
        open: vec![Rect {
            x0: 1,
            y0: cy0,
            x1: w - 2,
            y1: cy1,
        }],
        doors,
    })
}

/// Generate a house. Deterministic in `(config, seed)`.
pub fn generate_world(config: &WorldGenConfig, seed: u64) -> Result<GridWorld, WorldError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GridSpec::new(config.width, config.height, config.resolution);
    let (lo, hi) = config.room_count;
    let target = rng.gen_range(lo..=hi);
    let plan = match config.layout {
        Layout::Partition => partition_plan(config, target, &mut rng)?,
        Layout::Corridor => corridor_plan(config, target, &mut rng)?,
    };
    let rects = plan.rooms;

    let mut occupied = vec![true; spec.len()];
    for r in rects.iter().chain(&plan.open) {
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                occupied[spec.index(Cell::new(x, y)).unwrap()] = false;
            }
        }
    }
    for &c in &plan.doors {
        occupied[spec.index(c).unwrap()] = false;
    }

    let labels = sample_labels(config, rects.len(), &mut rng);
    let rooms: Vec<Room> = rects
        .iter()
        .zip(labels)
        .map(|(r, label)| Room {
            label,
            x0: r.x0,
            y0: r.y0,
            x1: r.x1,
            y1: r.y1,
        })
        .collect();

    // objects need a cell whose centre admits the agent disc
    let bare = GridWorld::new(spec, occupied.clone(), rooms.clone(), vec![], seed)?;
    let mut objects = Vec::new();
    for room in &rooms {
        let mut free: Vec<Cell> = room.cells().filter(|&c| bare.is_clear(c)).collect();
        for obj in &config.objects {
            let p = config.prior(obj, &room.label);
            for _ in 0..config.max_instances_per_room {
                if rng.gen::<f64>() < p && !free.is_empty() {
                    let k = rng.gen_range(0..free.len());
                    let position = free.swap_remove(k);
                    objects.push(ObjectInstance {
                        category: obj.clone(),
                        position,
                        id: objects.len() as u32,
                    });
                }
            }
        }
    }
    GridWorld::new(spec, occupied, rooms, objects, seed)
}

fn sample_labels(config: &WorldGenConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let weight = |l: &String| config.room_weights.get(l).copied().unwrap_or(1.0).max(0.0);
    let mut pool: Vec<&String> = Vec::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if pool.is_empty() {
            pool = config.rooms.iter().filter(|l| weight(l) > 0.0).collect();
            if pool.is_empty() {
                pool = config.rooms.iter().collect();
            }
        }
        let total: f64 = pool.iter().map(|l| weight(l)).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (i, l) in pool.iter().enumerate() {
            u -= weight(l);
            if u < 0.0 {
                pick = i;
                break;
            }
        }
        out.push(pool.remove(pick).clone());
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    /// Goal categories that were requested but have no reachable instance.
    pub skipped_goals: Vec<String>,
    /// Episodes that could not be placed (no start cell far enough away).
    pub unplaced: usize,
}

/// Sample `n` episodes, cycling over the goals that have a reachable
/// instance. Starts are clear cells at least 2 m (geodesic) from the goal.
pub fn make_episodes(world: &GridWorld, goals: &[String], n: usize, seed: u64) -> (Vec<Episode>, EpisodeReport) {
    const MIN_START_DISTANCE_M: f64 = 2.0;
    let mut report = EpisodeReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clear: Vec<Cell> = world.spec.cells().filter(|&c| world.is_clear(c)).collect();
    let mut usable: Vec<(&String, Vec<Cell>)> = Vec::new();
    for g in goals {
        let cells: Vec<Cell> = world.instances_of(g).map(|o| o.position).collect();
        let reachable = !cells.is_empty()
            && clear.iter().any(|&c| {
                let d = geodesic_distance(&world.spec, |x| !world.is_occupied(x), c, &cells);
                d.is_finite()
            });
        if reachable {
            usable.push((g, cells));
        } else {
            report.skipped_goals.push(g.clone());
        }
    }
    let mut episodes = Vec::new();
    if usable.is_empty() || clear.is_empty() {
        report.unplaced = n;
        return (episodes, report);
    }
    for i in 0..n {
        let (goal, cells) = &usable[i % usable.len()];
        let field = crate::grid::dijkstra(&world.spec, cells, |c| (!world.is_occupied(c)).then_some(1.0), None);
        let far: Vec<Cell> = clear
            .iter()
            .copied()
            .filter(|&c| {
                let d = field.at(c) * world.spec.resolution;
                d.is_finite() && d >= MIN_START_DISTANCE_M
            })
            .collect();
        let Some(&start) = far.choose(&mut rng) else {
            report.unplaced += 1;
            continue;
        };
        let heading = Heading::new(rng.gen_range(0..Heading::COUNT));
        episodes.push(Episode {
            id: episodes.len(),
            world_id: world.seed,
            start_pose: Pose::at_cell(&world.spec, start, heading),
            goal: (*goal).clone(),
            shortest_geodesic: field.at(start) * world.spec.resolution,
        });
    }
    (episodes, report)
}
