//! JSON world files. Occupancy rows are run-length encoded as
//! `<count><symbol>` pairs with `#` for occupied and `.` for free; row 0 is
//! the first entry (smallest y).

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridSpec};

use super::{GridWorld, ObjectInstance, Room, WorldError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub rows: Vec<String>,
    pub rooms: Vec<Room>,
    pub objects: Vec<ObjectRecord>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub category: String,
    pub x: i32,
    pub y: i32,
    pub id: u32,
}

pub fn encode_rows(spec: &GridSpec, occupied: &[bool]) -> Vec<String> {
    (0..spec.height)
        .map(|y| {
            let row = &occupied[y * spec.width..(y + 1) * spec.width];
            let mut s = String::new();
            let mut i = 0;
            while i < row.len() {
                let v = row[i];
                let run = row[i..].iter().take_while(|&&x| x == v).count();
                s.push_str(&run.to_string());
                s.push(if v { '#' } else { '.' });
                i += run;
            }
            s
        })
        .collect()
}

pub fn decode_rows(spec: &GridSpec, rows: &[String]) -> Result<Vec<bool>, WorldError> {
    if rows.len() != spec.height {
        return Err(WorldError::Format(format!(
            "expected {} rows, found {}",
            spec.height,
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(spec.len());
    for (y, row) in rows.iter().enumerate() {
        let start = out.len();
        let mut num = String::new();
        for ch in row.chars() {
            match ch {
                '0'..='9' => num.push(ch),
                '#' | '.' => {
                    let n: usize = num
                        .parse()
                        .map_err(|_| WorldError::Format(format!("row {y}: run without a count")))?;
                    out.extend(std::iter::repeat_n(ch == '#', n));
                    num.clear();
                }
                other => return Err(WorldError::Format(format!("row {y}: unexpected symbol {other:?}"))),
            }
        }
        if !num.is_empty() {
            return Err(WorldError::Format(format!("row {y}: trailing count {num}")));
        }
        if out.len() - start != spec.width {
            return Err(WorldError::Format(format!(
                "row {y} decodes to {} cells, expected {}",
                out.len() - start,
                spec.width
            )));
        }
    }
    Ok(out)
}

impl From<&GridWorld> for WorldFile {
    fn from(w: &GridWorld) -> Self {
        Self {
            width: w.spec.width,
            height: w.spec.height,
            resolution: w.spec.resolution,
            rows: encode_rows(&w.spec, w.occupancy()),
            rooms: w.rooms.clone(),
            objects: w
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    category: o.category.clone(),
                    x: o.position.x,
                    y: o.position.y,
                    id: o.id,
                })
                .collect(),
            seed: w.seed,
        }
    }
}

impl TryFrom<WorldFile> for GridWorld {
    type Error = WorldError;

    fn try_from(f: WorldFile) -> Result<Self, WorldError> {
        let spec = GridSpec::new(f.width, f.height, f.resolution);
        let occupied = decode_rows(&spec, &f.rows)?;
        let objects = f
            .objects
            .into_iter()
            .map(|o| ObjectInstance {
                category: o.category,
                position: Cell::new(o.x, o.y),
                id: o.id,
            })
            .collect();
        GridWorld::new(spec, occupied, f.rooms, objects, f.seed)
    }
}

impl GridWorld {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&WorldFile::from(self)).expect("world serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        let f: WorldFile = serde_json::from_str(s).map_err(|e| WorldError::Format(e.to_string()))?;
        f.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{generate_world, WorldGenConfig};
    use super::*;

    #[test]
    fn rle_rows() {
        let spec = GridSpec::new(5, 1, 0.25);
        let rows = encode_rows(&spec, &[true, true, false, false, true]);
        assert_eq!(rows, vec!["2#2.1#".to_string()]);
        assert_eq!(decode_rows(&spec, &rows).unwrap(), vec![true, true, false, false, true]);
        assert!(decode_rows(&spec, &["4#".to_string()]).is_err());
        assert!(decode_rows(&spec, &["5x".to_string()]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let w = generate_world(&WorldGenConfig::household(), 3).unwrap();
        let back = GridWorld::from_json(&w.to_json()).unwrap();
        assert_eq!(w, back);
    }
}
