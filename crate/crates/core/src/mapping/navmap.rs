use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridSpec, RayWalk};
use crate::world::{DepthScan, Pose, RayHit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Obstacle,
}

/// Agent-built occupancy map aligned with the world grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NavMap {
    pub spec: GridSpec,
    cells: Vec<CellState>,
}

impl NavMap {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            cells: vec![CellState::Unknown; spec.len()],
        }
    }

    /// Out-of-bounds cells read as obstacles.
    pub fn get(&self, c: Cell) -> CellState {
        self.spec.index(c).map_or(CellState::Obstacle, |i| self.cells[i])
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    /// Mark free unless already an obstacle.
    pub fn mark_free(&mut self, c: Cell) {
        if let Some(i) = self.spec.index(c) {
            if self.cells[i] == CellState::Unknown {
                self.cells[i] = CellState::Free;
            }
        }
    }

    pub fn mark_obstacle(&mut self, c: Cell) {
        if let Some(i) = self.spec.index(c) {
            self.cells[i] = CellState::Obstacle;
        }
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|&&s| s != CellState::Unknown).count()
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == CellState::Free
    }

    /// Free cell with at least one 4-neighbour still unknown.
    pub fn is_frontier_cell(&self, c: Cell) -> bool {
        self.is_free(c) && c.neighbors4().iter().any(|&n| self.get(n) == CellState::Unknown)
    }

    /// Ray interiors become free, obstacle hits become obstacles. Obstacles
    /// are never cleared.
    pub fn integrate_scan(&mut self, pose: &Pose, scan: &DepthScan) {
        self.mark_free(pose.cell(&self.spec));
        for ((&b, &range), &hit) in scan.bearings.iter().zip(&scan.ranges).zip(&scan.hits) {
            let angle = (pose.heading.degrees() + b).to_radians();
            let max_t = match hit {
                RayHit::Obstacle => range + 1e-6,
                RayHit::MaxRange => range,
            };
            for rc in RayWalk::new(&self.spec, (pose.x, pose.y), angle, max_t) {
                if rc.t_enter < range - 1e-9 {
                    self.mark_free(rc.cell);
                } else if hit == RayHit::Obstacle {
                    self.mark_obstacle(rc.cell);
                }
            }
        }
    }
}
