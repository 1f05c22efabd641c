use crate::grid::{Cell, GridSpec};

use super::{CellState, NavMap};

/// Binary PGM (P5) of the occupancy map, top row first (highest y).
pub fn pgm_bytes(nav: &NavMap) -> Vec<u8> {
    let spec = nav.spec;
    let mut out = format!("P5\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    for y in (0..spec.height as i32).rev() {
        for x in 0..spec.width as i32 {
            out.push(match nav.get(Cell::new(x, y)) {
                CellState::Unknown => 128,
                CellState::Free => 255,
                CellState::Obstacle => 0,
            });
        }
    }
    out
}

pub type Rgb = [u8; 3];

/// Stable tint for a label, derived from an FNV-1a hash of its bytes.
pub fn label_color(label: &str) -> Rgb {
    let mut h: u32 = 0x811c_9dc5;
    for b in label.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    // keep tints light so overlays stay readable
    [
        160 + (h & 0x5f) as u8,
        160 + ((h >> 8) & 0x5f) as u8,
        160 + ((h >> 16) & 0x5f) as u8,
    ]
}

/// RGB raster indexed by grid cells; serialised as binary PPM (P6).
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub spec: GridSpec,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(spec: GridSpec, fill: Rgb) -> Self {
        Self {
            spec,
            pixels: vec![fill; spec.len()],
        }
    }

    /// Grey-level rendering of the occupancy map.
    pub fn from_navmap(nav: &NavMap) -> Self {
        let mut img = Self::new(nav.spec, [128; 3]);
        for (i, &s) in nav.cells().iter().enumerate() {
            img.pixels[i] = match s {
                CellState::Unknown => [128; 3],
                CellState::Free => [255; 3],
                CellState::Obstacle => [0; 3],
            };
        }
        img
    }

    pub fn get(&self, c: Cell) -> Option<Rgb> {
        self.spec.index(c).map(|i| self.pixels[i])
    }

    pub fn set(&mut self, c: Cell, rgb: Rgb) {
        if let Some(i) = self.spec.index(c) {
            self.pixels[i] = rgb;
        }
    }

    /// Multiply the pixel by a tint (per channel, /255).
    pub fn tint(&mut self, c: Cell, rgb: Rgb) {
        if let Some(i) = self.spec.index(c) {
            let p = &mut self.pixels[i];
            for k in 0..3 {
                p[k] = ((p[k] as u16 * rgb[k] as u16) / 255) as u8;
            }
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let spec = self.spec;
        let mut out = format!("P6\n{} {}\n255\n", spec.width, spec.height).into_bytes();
        for y in (0..spec.height as i32).rev() {
            for x in 0..spec.width as i32 {
                out.extend_from_slice(&self.pixels[spec.index(Cell::new(x, y)).unwrap()]);
            }
        }
        out
    }
}
