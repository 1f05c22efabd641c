use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridSpec, RayWalk};
use crate::perception::{Detection, DetectionKind, CONFIDENCE_THRESHOLD};
use crate::world::{Pose, SENSOR_RANGE_M};

use super::frontier::Frontier;
use super::{CellState, MappingError, NavMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub confidence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContextKind {
    Object,
    Room,
}

/// Object points plus a per-cell room label layer keeping the most
/// confident label seen.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticMap {
    pub spec: GridSpec,
    objects: Vec<ObjectPoint>,
    room_labels: Vec<String>,
    rooms: Vec<Option<(u16, f64)>>,
}

impl SemanticMap {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            objects: Vec::new(),
            room_labels: Vec::new(),
            rooms: vec![None; spec.len()],
        }
    }

    pub fn objects(&self) -> &[ObjectPoint] {
        &self.objects
    }

    /// Object entries grouped by cell.
    pub fn objects_by_cell(&self) -> BTreeMap<Cell, Vec<(&str, f64)>> {
        let mut out: BTreeMap<Cell, Vec<(&str, f64)>> = BTreeMap::new();
        for o in &self.objects {
            out.entry(self.spec.cell_at(o.x, o.y))
                .or_default()
                .push((o.label.as_str(), o.confidence));
        }
        out
    }

    pub fn room_at(&self, c: Cell) -> Option<(&str, f64)> {
        let i = self.spec.index(c)?;
        self.rooms[i].map(|(l, conf)| (self.room_labels[l as usize].as_str(), conf))
    }

    pub fn labeled_room_cells(&self) -> usize {
        self.rooms.iter().filter(|r| r.is_some()).count()
    }

    fn room_label_id(&mut self, label: &str) -> u16 {
        match self.room_labels.iter().position(|l| l == label) {
            Some(i) => i as u16,
            None => {
                self.room_labels.push(label.to_string());
                (self.room_labels.len() - 1) as u16
            }
        }
    }

    fn label_room_cell(&mut self, c: Cell, id: u16, conf: f64) {
        if let Some(i) = self.spec.index(c) {
            match self.rooms[i] {
                Some((_, old)) if old >= conf => {}
                _ => self.rooms[i] = Some((id, conf)),
            }
        }
    }

    /// Record a detection seen from `pose`. Returns whether anything was
    /// written; detections beyond sensor range are dropped. Room rays stop at
    /// obstacles known to `nav`.
    pub fn project_detection(
        &mut self,
        pose: &Pose,
        det: &Detection,
        nav: Option<&NavMap>,
    ) -> Result<bool, MappingError> {
        if !(det.range > 0.0) || !det.range.is_finite() {
            return Err(MappingError::MalformedDetection(format!("range {}", det.range)));
        }
        if !(CONFIDENCE_THRESHOLD..=1.0).contains(&det.confidence) {
            return Err(MappingError::MalformedDetection(format!(
                "confidence {} outside [{CONFIDENCE_THRESHOLD}, 1]",
                det.confidence
            )));
        }
        if det.range > SENSOR_RANGE_M {
            return Ok(false);
        }
        match det.kind {
            DetectionKind::Object => {
                let a = (pose.heading.degrees() + det.bearing).to_radians();
                self.objects.push(ObjectPoint {
                    x: pose.x + det.range * a.cos(),
                    y: pose.y + det.range * a.sin(),
                    label: det.label.clone(),
                    confidence: det.confidence,
                });
            }
            DetectionKind::Room => {
                let id = self.room_label_id(&det.label);
                let half = det.angular_extent / 2.0;
                let n = det.angular_extent.max(0.0).floor() as i32;
                for k in 0..=n {
                    let b = det.bearing - half + k as f64;
                    let a = (pose.heading.degrees() + b).to_radians();
                    for rc in RayWalk::new(&self.spec, (pose.x, pose.y), a, det.range) {
                        if nav.is_some_and(|m| m.get(rc.cell) == CellState::Obstacle) {
                            break;
                        }
                        self.label_room_cell(rc.cell, id, det.confidence);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Max confidence per label within a closed ball of `radius` meters
    /// around the frontier centroid, sorted by label.
    pub fn context_near(&self, f: &Frontier, kind: ContextKind, radius: f64) -> Vec<(String, f64)> {
        let (cx, cy) = f.centroid;
        fn offer(label: &str, conf: f64, best: &mut BTreeMap<String, f64>) {
            let e = best.entry(label.to_string()).or_insert(conf);
            if conf > *e {
                *e = conf;
            }
        }
        let mut owned: BTreeMap<String, f64> = BTreeMap::new();
        const EPS: f64 = 1e-9;
        match kind {
            ContextKind::Object => {
                for o in &self.objects {
                    if (o.x - cx).hypot(o.y - cy) <= radius + EPS {
                        offer(&o.label, o.confidence, &mut owned);
                    }
                }
            }
            ContextKind::Room => {
                let lo = self.spec.cell_at(cx - radius, cy - radius);
                let hi = self.spec.cell_at(cx + radius, cy + radius);
                for y in lo.y..=hi.y {
                    for x in lo.x..=hi.x {
                        let c = Cell::new(x, y);
                        let (px, py) = self.spec.center(c);
                        if (px - cx).hypot(py - cy) > radius + EPS {
                            continue;
                        }
                        if let Some((l, conf)) = self.room_at(c) {
                            offer(l, conf, &mut owned);
                        }
                    }
                }
            }
        }
        owned.into_iter().collect()
    }
}
