//! Cell indexing, ray traversal and Dijkstra on 8-connected grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(1, 0),
            self.offset(-1, 0),
            self.offset(0, 1),
            self.offset(0, -1),
        ]
    }

    pub fn neighbors8(self) -> [Cell; 8] {
        [
            self.offset(1, 0),
            self.offset(-1, 0),
            self.offset(0, 1),
            self.offset(0, -1),
            self.offset(1, 1),
            self.offset(1, -1),
            self.offset(-1, 1),
            self.offset(-1, -1),
        ]
    }

    pub fn chebyshev(self, o: Cell) -> i32 {
        (self.x - o.x).abs().max((self.y - o.y).abs())
    }
}

/// Rectangular grid geometry with row-major storage, row 0 at `y = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        Self {
            width,
            height,
            resolution,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.contains(c).then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_of_index(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.resolution).floor() as i32,
            (y / self.resolution).floor() as i32,
        )
    }

    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell_of_index(i))
    }
}

/// One cell crossed by a ray, with entry and exit distances in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayCell {
    pub cell: Cell,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Voxel traversal of the ray `origin + t * (cos a, sin a)` for `t` in
/// `[0, max_t]`, in order of increasing `t`.
pub struct RayWalk {
    cell: Cell,
    step: (i32, i32),
    t_max: (f64, f64),
    t_delta: (f64, f64),
    t: f64,
    max_t: f64,
    done: bool,
}

impl RayWalk {
    pub fn new(spec: &GridSpec, origin: (f64, f64), angle_rad: f64, max_t: f64) -> Self {
        let res = spec.resolution;
        let (dx, dy) = (angle_rad.cos(), angle_rad.sin());
        // snap near-axis directions so that boundary crossings are exact
        let dx = if dx.abs() < 1e-12 { 0.0 } else { dx };
        let dy = if dy.abs() < 1e-12 { 0.0 } else { dy };
        let px = origin.0 / res;
        let py = origin.1 / res;
        let cell = Cell::new(px.floor() as i32, py.floor() as i32);
        let axis = |p: f64, d: f64, c: i32| -> (i32, f64, f64) {
            if d > 0.0 {
                (1, ((c as f64 + 1.0) - p) * res / d, res / d)
            } else if d < 0.0 {
                (-1, (p - c as f64) * res / -d, res / -d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, tmx, tdx) = axis(px, dx, cell.x);
        let (sy, tmy, tdy) = axis(py, dy, cell.y);
        Self {
            cell,
            step: (sx, sy),
            t_max: (tmx, tmy),
            t_delta: (tdx, tdy),
            t: 0.0,
            max_t,
            done: false,
        }
    }
}

impl Iterator for RayWalk {
    type Item = RayCell;

    fn next(&mut self) -> Option<RayCell> {
        if self.done {
            return None;
        }
        let exit = self.t_max.0.min(self.t_max.1);
        let out = RayCell {
            cell: self.cell,
            t_enter: self.t,
            t_exit: exit.min(self.max_t),
        };
        if exit >= self.max_t {
            self.done = true;
        } else {
            if self.t_max.0 < self.t_max.1 {
                self.cell.x += self.step.0;
                self.t_max.0 += self.t_delta.0;
            } else {
                self.cell.y += self.step.1;
                self.t_max.1 += self.t_delta.1;
            }
            self.t = exit;
        }
        Some(out)
    }
}

/// Whether the segment `a -> b` passes through the open interior of `cell`.
/// Symmetric in `a` and `b`.
pub fn segment_crosses_cell(spec: &GridSpec, a: (f64, f64), b: (f64, f64), cell: Cell) -> bool {
    let res = spec.resolution;
    let (x0, y0) = (cell.x as f64 * res, cell.y as f64 * res);
    let (x1, y1) = (x0 + res, y0 + res);
    // Liang-Barsky against the open box
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (p, q) in [(-dx, a.0 - x0), (dx, x1 - a.0), (-dy, a.1 - y0), (dy, y1 - a.1)] {
        if p == 0.0 {
            if q <= 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    hi - lo > 1e-12
}

/// Cells whose open interior the segment `a -> b` crosses.
pub fn segment_cells(spec: &GridSpec, a: (f64, f64), b: (f64, f64)) -> Vec<Cell> {
    let ca = spec.cell_at(a.0.min(b.0), a.1.min(b.1));
    let cb = spec.cell_at(a.0.max(b.0), a.1.max(b.1));
    let mut out = Vec::new();
    for y in ca.y..=cb.y {
        for x in ca.x..=cb.x {
            let c = Cell::new(x, y);
            if segment_crosses_cell(spec, a, b, c) {
                out.push(c);
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Result of a Dijkstra sweep: cost to every cell (in cell units) and the
/// predecessor on one shortest path.
pub struct DistanceField {
    pub spec: GridSpec,
    pub cost: Vec<f64>,
    pub parent: Vec<usize>,
}

impl DistanceField {
    pub fn at(&self, c: Cell) -> f64 {
        self.spec.index(c).map_or(f64::INFINITY, |i| self.cost[i])
    }

    /// Cells from a source to `c`, inclusive at both ends.
    pub fn path_to(&self, c: Cell) -> Option<Vec<Cell>> {
        let mut i = self.spec.index(c)?;
        if !self.cost[i].is_finite() {
            return None;
        }
        let mut out = vec![c];
        while self.parent[i] != usize::MAX {
            i = self.parent[i];
            out.push(self.spec.cell_of_index(i));
        }
        out.reverse();
        Some(out)
    }
}

/// Multi-source Dijkstra on the 8-connected grid.
///
/// `enter_cost(c)` is the multiplier for stepping into `c` (None: impassable).
/// Diagonal steps cost `sqrt(2)` times the multiplier and are only allowed
/// when both orthogonal cells they cut past are passable. Stops early once
/// `stop_at` is settled.
pub fn dijkstra<F>(spec: &GridSpec, sources: &[Cell], enter_cost: F, stop_at: Option<Cell>) -> DistanceField
where
    F: Fn(Cell) -> Option<f64>,
{
    let n = spec.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if let Some(i) = spec.index(s) {
            cost[i] = 0.0;
            heap.push(Entry { cost: 0.0, idx: i });
        }
    }
    let stop_idx = stop_at.and_then(|c| spec.index(c));
    const DIRS: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    while let Some(Entry { cost: d, idx }) = heap.pop() {
        if d > cost[idx] {
            continue;
        }
        if Some(idx) == stop_idx {
            break;
        }
        let c = spec.cell_of_index(idx);
        for (dx, dy) in DIRS {
            let nc = c.offset(dx, dy);
            let Some(ni) = spec.index(nc) else { continue };
            let Some(mult) = enter_cost(nc) else { continue };
            let diag = dx != 0 && dy != 0;
            if diag && (enter_cost(c.offset(dx, 0)).is_none() || enter_cost(c.offset(0, dy)).is_none()) {
                continue;
            }
            let nd = d + if diag { SQRT_2 * mult } else { mult };
            if nd < cost[ni] {
                cost[ni] = nd;
                parent[ni] = idx;
                heap.push(Entry { cost: nd, idx: ni });
            }
        }
    }
    DistanceField {
        spec: *spec,
        cost,
        parent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_walk_east_from_center() {
        let spec = GridSpec::new(30, 3, 0.25);
        let cells: Vec<RayCell> = RayWalk::new(&spec, (0.125, 0.375), 0.0, 1.0).collect();
        assert_eq!(cells.first().unwrap().cell, Cell::new(0, 1));
        assert_eq!(cells.last().unwrap().cell, Cell::new(4, 1));
        assert!((cells[1].t_enter - 0.125).abs() < 1e-12);
        assert_eq!(cells.len(), 5);
    }

    #[test]
    fn segment_test_is_symmetric_on_corners() {
        let spec = GridSpec::new(4, 4, 1.0);
        let a = (0.0, 0.0);
        let b = (2.0, 2.0);
        let ab = segment_cells(&spec, a, b);
        let ba = segment_cells(&spec, b, a);
        assert_eq!(ab, ba);
        assert_eq!(ab, vec![Cell::new(0, 0), Cell::new(1, 1)]);
    }

    #[test]
    fn dijkstra_no_corner_cutting() {
        let spec = GridSpec::new(3, 3, 1.0);
        let blocked = [Cell::new(1, 0), Cell::new(0, 1)];
        let f = dijkstra(
            &spec,
            &[Cell::new(0, 0)],
            |c| (!blocked.contains(&c)).then_some(1.0),
            None,
        );
        assert!(f.at(Cell::new(1, 1)).is_infinite());
    }
}
