//! Occupancy and semantic maps built from observations, and frontier
//! extraction.

mod export;
mod frontier;
mod navmap;
mod semantic;

use thiserror::Error;

pub use export::{label_color, pgm_bytes, Rgb, RgbImage};
pub use frontier::{
    extract_frontiers, free_space_field, frontier_distance, frontier_distance_in, Frontier, DEFAULT_MIN_FRONTIER_SIZE,
};
pub use navmap::{CellState, NavMap};
pub use semantic::{ContextKind, ObjectPoint, SemanticMap};

#[derive(Debug, Error, PartialEq)]
pub enum MappingError {
    #[error("malformed detection: {0}")]
    MalformedDetection(String),
}
