use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::grid::{dijkstra, Cell, DistanceField, GridSpec};
use crate::world::Pose;

use super::NavMap;

pub const DEFAULT_MIN_FRONTIER_SIZE: usize = 2;

/// 8-connected group of free cells bordering unknown space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: usize,
    /// Sorted row-major.
    pub cells: Vec<Cell>,
    /// Mean of the cell centres, in meters.
    pub centroid: (f64, f64),
}

impl Frontier {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// The member cell closest to the centroid; the navigation target.
    pub fn anchor(&self, nav: &NavMap) -> Cell {
        self.anchor_in(&nav.spec)
    }

    pub fn anchor_in(&self, spec: &GridSpec) -> Cell {
        let (cx, cy) = self.centroid;
        *self
            .cells
            .iter()
            .min_by(|a, b| {
                let da = dist2(spec.center(**a), (cx, cy));
                let db = dist2(spec.center(**b), (cx, cy));
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("frontier has cells")
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// All frontier components of at least `min_size` cells, ordered by
/// centroid (row-major) with ids assigned in that order.
pub fn extract_frontiers(nav: &NavMap, min_size: usize) -> Vec<Frontier> {
    let spec = nav.spec;
    let border: Vec<bool> = spec.cells().map(|c| nav.is_frontier_cell(c)).collect();
    let mut seen = vec![false; spec.len()];
    let mut out = Vec::new();
    for start in 0..spec.len() {
        if !border[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut cells = Vec::new();
        while let Some(i) = queue.pop_front() {
            let c = spec.cell_of_index(i);
            cells.push(c);
            for n in c.neighbors8() {
                if let Some(j) = spec.index(n) {
                    if border[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if cells.len() < min_size {
            continue;
        }
        cells.sort_by_key(|c| (c.y, c.x));
        let n = cells.len() as f64;
        let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let (x, y) = spec.center(c);
            (sx + x, sy + y)
        });
        out.push(Frontier {
            id: 0,
            cells,
            centroid: (sx / n, sy / n),
        });
    }
    out.sort_by(|a, b| {
        a.centroid
            .1
            .total_cmp(&b.centroid.1)
            .then(a.centroid.0.total_cmp(&b.centroid.0))
            .then(a.cells[0].cmp(&b.cells[0]))
    });
    for (i, f) in out.iter_mut().enumerate() {
        f.id = i;
    }
    out
}

/// Geodesic field over free cells from the agent's cell.
pub fn free_space_field(nav: &NavMap, pose: &Pose) -> DistanceField {
    let start = pose.cell(&nav.spec);
    dijkstra(&nav.spec, &[start], |c| nav.is_free(c).then_some(1.0), None)
}

/// Distance in meters from the agent to the anchor of `f` using a
/// precomputed [`free_space_field`].
pub fn frontier_distance_in(field: &DistanceField, f: &Frontier) -> f64 {
    field.at(f.anchor_in(&field.spec)) * field.spec.resolution
}

/// Geodesic distance over free cells from the agent to the anchor of `f`;
/// infinity when disconnected.
pub fn frontier_distance(nav: &NavMap, pose: &Pose, f: &Frontier) -> f64 {
    frontier_distance_in(&free_space_field(nav, pose), f)
}

#[cfg(test)]
mod tests {
    use super::super::CellState;
    use super::*;
    use crate::grid::GridSpec;
    use crate::world::Heading;

    fn map_with(spec: GridSpec, free: impl Iterator<Item = Cell>) -> NavMap {
        let mut m = NavMap::new(spec);
        for c in free {
            m.mark_free(c);
        }
        m
    }

    #[test]
    fn unknown_map_has_no_frontiers() {
        let m = NavMap::new(GridSpec::new(10, 10, 0.25));
        assert!(extract_frontiers(&m, 2).is_empty());
    }

    #[test]
    fn free_patch_in_unknown_sea() {
        let spec = GridSpec::new(10, 10, 0.25);
        let m = map_with(spec, (3..6).flat_map(|y| (3..6).map(move |x| Cell::new(x, y))));
        let fs = extract_frontiers(&m, 2);
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].size(), 8);
        assert!(!fs[0].cells.contains(&Cell::new(4, 4)));
        let (cx, cy) = fs[0].centroid;
        assert!((cx - 1.125).abs() < 1e-12 && (cy - 1.125).abs() < 1e-12);
    }

    #[test]
    fn small_components_dropped() {
        let spec = GridSpec::new(10, 10, 0.25);
        let m = map_with(spec, [Cell::new(2, 2)].into_iter());
        assert!(extract_frontiers(&m, 2).is_empty());
        assert_eq!(extract_frontiers(&m, 1).len(), 1);
    }

    #[test]
    fn distances() {
        let spec = GridSpec::new(20, 5, 0.25);
        // corridor y=2 fully free, everything else unknown
        let mut m = map_with(spec, (0..20).map(|x| Cell::new(x, 2)));
        for x in 0..20 {
            m.mark_obstacle(Cell::new(x, 1));
        }
        let p = Pose::at_cell(&spec, Cell::new(5, 2), Heading::new(0));
        let f = Frontier {
            id: 0,
            cells: vec![Cell::new(6, 2)],
            centroid: spec.center(Cell::new(6, 2)),
        };
        assert_eq!(frontier_distance(&m, &p, &f), 0.25);
        let far = Frontier {
            id: 1,
            cells: vec![Cell::new(13, 2)],
            centroid: spec.center(Cell::new(13, 2)),
        };
        assert!((frontier_distance(&m, &p, &far) - 2.0).abs() <= 0.25);
        m.mark_obstacle(Cell::new(9, 2));
        assert!(frontier_distance(&m, &p, &far).is_infinite());
        assert_eq!(m.get(Cell::new(9, 2)), CellState::Obstacle);
    }
}
