//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the code under test beyond plain data types, so a
//! bug in the library cannot hide in its own check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use softnav_core::grid::{Cell, GridSpec};
use softnav_core::mapping::{CellState, NavMap};
use softnav_core::softlogic::{AtomKey, Literal, Pruning, Term};
use softnav_core::{Atom, Grounding, RuleTemplate};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const TIE_REL: f64 = 1e-9;

pub fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_REL * 1f64.max(a.abs()).max(b.abs())
}

/// A frontier-selection problem held as plain numbers.
#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub objects: Vec<String>,
    pub rooms: Vec<String>,
    pub cooccur: BTreeMap<String, f64>,
    /// `near_obj[f][o]`, aligned with `objects`.
    pub near_obj: Vec<Vec<f64>>,
    pub near_room: Vec<Vec<f64>>,
    pub distance: Vec<f64>,
    pub ids: Vec<usize>,
    pub use_object: bool,
    pub use_room: bool,
    pub w_obj: f64,
    pub w_obj_neg: f64,
    pub w_room: f64,
    pub w_room_neg: f64,
    pub w_dist: f64,
    pub p: i32,
}

fn context(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.61..1.0)
    }
}

impl RandomProgram {
    pub fn sample(rng: &mut ChaCha8Rng, max_frontiers: usize, max_labels: usize) -> Self {
        let n = rng.gen_range(1..=max_frontiers);
        let labels = rng.gen_range(1..=max_labels);
        let n_rooms = rng.gen_range(0..=labels);
        let objects: Vec<String> = (0..labels - n_rooms).map(|i| format!("o{i}")).collect();
        let rooms: Vec<String> = (0..n_rooms).map(|i| format!("r{i}")).collect();
        let cooccur = objects
            .iter()
            .chain(&rooms)
            .map(|l| {
                let s = match rng.gen_range(0..4) {
                    0 => 0.5,
                    1 => rng.gen_range(0.9..=1.0),
                    _ => rng.gen_range(0.0..=1.0),
                };
                (l.clone(), s)
            })
            .collect();
        let mut near_obj: Vec<Vec<f64>> = (0..n).map(|_| objects.iter().map(|_| context(rng)).collect()).collect();
        let mut near_room: Vec<Vec<f64>> = (0..n).map(|_| rooms.iter().map(|_| context(rng)).collect()).collect();
        let mut distance: Vec<f64> = (0..n).map(|_| rng.gen_range(1.6..12.0)).collect();
        if n > 1 && rng.gen_bool(0.25) {
            // exact copies force the tie-break path
            let k = rng.gen_range(1..n);
            near_obj[k] = near_obj[0].clone();
            near_room[k] = near_room[0].clone();
            distance[k] = distance[0];
        }
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(rng);
        // a rule family needs at least one label to ground against
        let use_object = rng.gen_bool(0.8) && !objects.is_empty();
        let use_room = rng.gen_bool(0.8) && !rooms.is_empty();
        let unit_weights = rng.gen_bool(0.5);
        let w = |rng: &mut ChaCha8Rng| if unit_weights { 1.0 } else { rng.gen_range(0.1..3.0) };
        let (w_obj, w_obj_neg, w_room, w_room_neg) = (w(rng), w(rng), w(rng), w(rng));
        let w_dist = if unit_weights {
            if use_object && use_room {
                2.0
            } else {
                1.0
            }
        } else {
            rng.gen_range(0.1..3.0)
        };
        let p = if rng.gen_bool(0.75) { 1 } else { 2 };
        Self {
            objects,
            rooms,
            cooccur,
            near_obj,
            near_room,
            distance,
            ids,
            use_object,
            use_room,
            w_obj,
            w_obj_neg,
            w_room,
            w_room_neg,
            w_dist,
            p,
        }
    }

    pub fn frontiers(&self) -> usize {
        self.distance.len()
    }

    pub fn short_dist(&self) -> Vec<f64> {
        let d_min = self.distance.iter().copied().fold(f64::INFINITY, f64::min);
        self.distance.iter().map(|&d| d_min / d).collect()
    }

    fn arg(&self, f: usize) -> String {
        format!("f{f}")
    }

    pub fn choose_key(&self, f: usize) -> AtomKey {
        AtomKey::new("ChooseFrontier", [self.arg(f)])
    }

    pub fn templates(&self) -> Vec<RuleTemplate> {
        let cooc = |v: &str| Literal::with_args("IsCooccur", vec![Term::Const("g".into()), Term::Var(v.into())]);
        let choose = Literal::new("ChooseFrontier", &["F"]);
        let mut out = Vec::new();
        if self.use_object {
            let near = Literal::new("IsNearObj", &["F", "O"]);
            out.push(RuleTemplate::new(
                "object",
                self.w_obj,
                vec![cooc("O"), near.clone()],
                choose.clone(),
            ));
            out.push(RuleTemplate::new(
                "object_neg",
                self.w_obj_neg,
                vec![cooc("O").negate(), near],
                choose.clone().negate(),
            ));
        }
        if self.use_room {
            let near = Literal::new("IsNearRoom", &["F", "R"]);
            out.push(RuleTemplate::new(
                "room",
                self.w_room,
                vec![cooc("R"), near.clone()],
                choose.clone(),
            ));
            out.push(RuleTemplate::new(
                "room_neg",
                self.w_room_neg,
                vec![cooc("R").negate(), near],
                choose.clone().negate(),
            ));
        }
        out.push(RuleTemplate::new(
            "short_dist",
            self.w_dist,
            vec![Literal::new("ShortDist", &["F"])],
            choose,
        ));
        if self.p == 2 {
            out = out.into_iter().map(RuleTemplate::squared).collect();
        }
        out
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut atoms = Vec::new();
        for (l, &s) in &self.cooccur {
            atoms.push(Atom::observed(AtomKey::new("IsCooccur", ["g", l.as_str()]), s));
        }
        for (f, short) in self.short_dist().into_iter().enumerate() {
            let fa = self.arg(f);
            for (o, &v) in self.objects.iter().zip(&self.near_obj[f]) {
                atoms.push(Atom::observed(AtomKey::new("IsNearObj", [fa.as_str(), o]), v));
            }
            for (r, &v) in self.rooms.iter().zip(&self.near_room[f]) {
                atoms.push(Atom::observed(AtomKey::new("IsNearRoom", [fa.as_str(), r]), v));
            }
            atoms.push(Atom::observed(AtomKey::new("ShortDist", [fa.as_str()]), short));
            atoms.push(Atom::target(self.choose_key(f)).with_tie_break(self.distance[f], self.ids[f]));
        }
        atoms
    }

    pub fn grounding(&self, pruning: Pruning) -> Grounding {
        let simplex: Vec<AtomKey> = (0..self.frontiers()).map(|f| self.choose_key(f)).collect();
        Grounding::build(self.atoms(), self.templates(), &[simplex], pruning).expect("valid program")
    }

    /// Frontier index named by a `ChooseFrontier` key.
    pub fn frontier_of(&self, key: &AtomKey) -> usize {
        key.args[0][1..].parse().expect("frontier argument")
    }

    fn hinge(&self, w: f64, body: f64, head: f64) -> f64 {
        w * (body - head).max(0.0).powi(self.p)
    }

    /// Energy of an arbitrary point `y` of the simplex, summed rule by rule.
    pub fn energy(&self, y: &[f64]) -> f64 {
        let and2 = |a: f64, b: f64| (a + b - 1.0).max(0.0);
        let short = self.short_dist();
        let mut e = 0.0;
        for f in 0..self.frontiers() {
            if self.use_object {
                for (o, &near) in self.objects.iter().zip(&self.near_obj[f]) {
                    let s = self.cooccur[o];
                    e += self.hinge(self.w_obj, and2(s, near), y[f]);
                    e += self.hinge(self.w_obj_neg, and2(1.0 - s, near), 1.0 - y[f]);
                }
            }
            if self.use_room {
                for (r, &near) in self.rooms.iter().zip(&self.near_room[f]) {
                    let s = self.cooccur[r];
                    e += self.hinge(self.w_room, and2(s, near), y[f]);
                    e += self.hinge(self.w_room_neg, and2(1.0 - s, near), 1.0 - y[f]);
                }
            }
            e += self.hinge(self.w_dist, short[f], y[f]);
        }
        e
    }

    pub fn vertex_energies(&self) -> Vec<f64> {
        let n = self.frontiers();
        (0..n)
            .map(|k| {
                let y: Vec<f64> = (0..n).map(|f| if f == k { 1.0 } else { 0.0 }).collect();
                self.energy(&y)
            })
            .collect()
    }

    /// Exhaustive one-hot choice: lowest energy, then shortest distance,
    /// then lowest frontier id.
    pub fn oracle_choice(&self) -> (usize, f64) {
        let e = self.vertex_energies();
        let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
        let best = (0..e.len())
            .filter(|&f| ties(e[f], e_min))
            .min_by(|&a, &b| {
                self.distance[a]
                    .total_cmp(&self.distance[b])
                    .then(self.ids[a].cmp(&self.ids[b]))
                    .then(a.cmp(&b))
            })
            .expect("at least one frontier");
        (best, e[best])
    }
}

/// Random partially observed map mixing noise and carved open regions.
pub fn random_navmap(rng: &mut ChaCha8Rng, w: usize, h: usize) -> NavMap {
    let spec = GridSpec::new(w, h, 0.25);
    let mut nav = NavMap::new(spec);
    if rng.gen_bool(0.5) {
        let pf = rng.gen_range(0.2..0.7);
        let po = rng.gen_range(0.0..0.3);
        for c in spec.cells().collect::<Vec<_>>() {
            let u: f64 = rng.gen();
            if u < pf {
                nav.mark_free(c);
            } else if u < pf + po {
                nav.mark_obstacle(c);
            }
        }
    } else {
        for _ in 0..rng.gen_range(1..8) {
            let (x0, y0) = (rng.gen_range(0..w as i32), rng.gen_range(0..h as i32));
            let (rw, rh) = (rng.gen_range(1..15), rng.gen_range(1..15));
            for y in y0..y0 + rh {
                for x in x0..x0 + rw {
                    nav.mark_free(Cell::new(x, y));
                }
            }
        }
        for _ in 0..rng.gen_range(0..120) {
            nav.mark_obstacle(Cell::new(rng.gen_range(0..w as i32), rng.gen_range(0..h as i32)));
        }
    }
    nav
}

fn state(spec: &GridSpec, cells: &[CellState], x: i32, y: i32) -> Option<CellState> {
    (x >= 0 && y >= 0 && (x as usize) < spec.width && (y as usize) < spec.height)
        .then(|| cells[y as usize * spec.width + x as usize])
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Frontier cell groups by border scan and union-find, in the library's
/// id order: by centroid row-major, then by first cell.
pub fn oracle_frontiers(nav: &NavMap, min_size: usize) -> Vec<Vec<Cell>> {
    let spec = nav.spec;
    let cells = nav.cells();
    let (w, h) = (spec.width as i32, spec.height as i32);
    let border = |x: i32, y: i32| {
        state(&spec, cells, x, y) == Some(CellState::Free)
            && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(dx, dy)| state(&spec, cells, x + dx, y + dy) == Some(CellState::Unknown))
    };
    let idx = |x: i32, y: i32| (y * w + x) as usize;
    let mut uf = UnionFind((0..spec.len()).collect());
    for y in 0..h {
        for x in 0..w {
            if !border(x, y) {
                continue;
            }
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy) != (0, 0) && border(x + dx, y + dy) {
                        uf.union(idx(x, y), idx(x + dx, y + dy));
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<Cell>> = BTreeMap::new();
    for y in 0..h {
        for x in 0..w {
            if border(x, y) {
                groups.entry(uf.find(idx(x, y))).or_default().push(Cell::new(x, y));
            }
        }
    }
    let mut out: Vec<(f64, f64, Vec<Cell>)> = groups
        .into_values()
        .filter(|g| g.len() >= min_size)
        .map(|g| {
            let n = g.len() as f64;
            let cx = g.iter().map(|c| (c.x as f64 + 0.5) * spec.resolution).sum::<f64>() / n;
            let cy = g.iter().map(|c| (c.y as f64 + 0.5) * spec.resolution).sum::<f64>() / n;
            (cx, cy, g)
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.0.total_cmp(&b.0))
            .then((a.2[0].y, a.2[0].x).cmp(&(b.2[0].y, b.2[0].x)))
    });
    out.into_iter().map(|(_, _, g)| g).collect()
}

/// Member cell closest to the mean of the cell centres; ties by (x, y).
pub fn oracle_anchor(cells: &[Cell], resolution: f64) -> Cell {
    let n = cells.len() as f64;
    let cx = cells.iter().map(|c| c.x as f64 + 0.5).sum::<f64>() / n * resolution;
    let cy = cells.iter().map(|c| c.y as f64 + 0.5).sum::<f64>() / n * resolution;
    let d = |c: &Cell| ((c.x as f64 + 0.5) * resolution - cx).powi(2) + ((c.y as f64 + 0.5) * resolution - cy).powi(2);
    *cells
        .iter()
        .min_by(|a, b| d(a).total_cmp(&d(b)).then((a.x, a.y).cmp(&(b.x, b.y))))
        .expect("non-empty group")
}

/// Shortest 8-connected path costs (cell units) by repeated full-grid
/// relaxation. Diagonals cost sqrt 2 and need both orthogonal cells
/// passable; the source itself need not be passable.
pub fn sweep_distances(spec: &GridSpec, passable: impl Fn(Cell) -> bool, source: Cell) -> Vec<f64> {
    let (w, h) = (spec.width as i32, spec.height as i32);
    let inside = |c: Cell| c.x >= 0 && c.y >= 0 && c.x < w && c.y < h;
    let open = |c: Cell| inside(c) && passable(c);
    let at = |c: Cell| (c.y * w + c.x) as usize;
    let mut d = vec![f64::INFINITY; spec.len()];
    d[at(source)] = 0.0;
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x, y);
                if !d[at(c)].is_finite() {
                    continue;
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if (dx, dy) == (0, 0) {
                            continue;
                        }
                        let n = Cell::new(x + dx, y + dy);
                        if !open(n) {
                            continue;
                        }
                        let diag = dx != 0 && dy != 0;
                        if diag && !(open(Cell::new(x + dx, y)) && open(Cell::new(x, y + dy))) {
                            continue;
                        }
                        let nd = d[at(c)] + if diag { std::f64::consts::SQRT_2 } else { 1.0 };
                        if nd < d[at(n)] - 1e-12 {
                            d[at(n)] = nd;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Breadth-first step counts over 4-connected passable cells.
pub fn bfs4(spec: &GridSpec, passable: impl Fn(Cell) -> bool, source: Cell) -> Vec<Option<usize>> {
    let (w, h) = (spec.width as i32, spec.height as i32);
    let at = |c: Cell| (c.y * w + c.x) as usize;
    let mut d = vec![None; spec.len()];
    d[at(source)] = Some(0);
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(c) = queue.pop_front() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = Cell::new(c.x + dx, c.y + dy);
            if n.x < 0 || n.y < 0 || n.x >= w || n.y >= h || !passable(n) || d[at(n)].is_some() {
                continue;
            }
            d[at(n)] = Some(d[at(c)].unwrap() + 1);
            queue.push_back(n);
        }
    }
    d
}

/// Textbook Dijkstra with a binary heap over the same move rules as
/// [`sweep_distances`]; fast enough for full-size maps.
pub fn heap_distances(spec: &GridSpec, passable: impl Fn(Cell) -> bool, source: Cell) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let (w, h) = (spec.width as i32, spec.height as i32);
    let open = |c: Cell| c.x >= 0 && c.y >= 0 && c.x < w && c.y < h && passable(c);
    let at = |c: Cell| (c.y * w + c.x) as usize;
    let mut d = vec![f64::INFINITY; spec.len()];
    d[at(source)] = 0.0;
    // f64 bits order like the values for non-negative finite numbers
    let mut heap = BinaryHeap::from([Reverse((0u64, source.x, source.y))]);
    while let Some(Reverse((bits, x, y))) = heap.pop() {
        let dc = f64::from_bits(bits);
        let c = Cell::new(x, y);
        if dc > d[at(c)] {
            continue;
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                let n = Cell::new(x + dx, y + dy);
                if (dx, dy) == (0, 0) || !open(n) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(open(Cell::new(x + dx, y)) && open(Cell::new(x, y + dy))) {
                    continue;
                }
                let nd = dc + if diag { std::f64::consts::SQRT_2 } else { 1.0 };
                if nd < d[at(n)] {
                    d[at(n)] = nd;
                    heap.push(Reverse((nd.to_bits(), n.x, n.y)));
                }
            }
        }
    }
    d
}
