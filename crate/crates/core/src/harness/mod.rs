//! Benchmark orchestration: configuration, episode runs, persistence and
//! map export.

mod bench;
mod episode;
mod export;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commonsense::{LlmEndpointConfig, ScoreError};
use crate::metrics::MetricsError;
use crate::perception::{NoiseModel, PerceptionError, Vocabulary};
use crate::policy::{PolicyConfig, PolicyError};
use crate::world::{WorldError, WorldGenConfig, DEFAULT_SUCCESS_DISTANCE_M};

pub use bench::{
    build_suite, compare, load_episodes, read_jsonl, resolve_scores, run_benchmark, write_jsonl, BenchmarkOutput,
    Comparison, Suite,
};
pub use episode::{observe, run_episode, run_episode_with, EpisodeRun, EpisodeTiming, StepView, TraceStep};
pub use export::{export_map, MapImages, Overlay};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorldSource {
    /// Procedurally generated worlds with seeds `seed, seed + 1, ...`.
    Generate {
        #[serde(default)]
        config: WorldGenConfig,
        worlds: usize,
        seed: u64,
    },
    /// World files, with an optional episode JSONL file; episodes are
    /// sampled when it is absent.
    Files {
        worlds: Vec<PathBuf>,
        #[serde(default)]
        episodes: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreSource {
    /// Table derived from the generator's placement priors.
    Priors,
    Table {
        path: PathBuf,
    },
    Endpoint {
        endpoint: LlmEndpointConfig,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub world: WorldSource,
    pub episodes_per_world: usize,
    pub episode_seed: u64,
    /// Goal categories; the vocabulary's goal list when `None`.
    pub goals: Option<Vec<String>>,
    pub vocabulary: Option<PathBuf>,
    pub scores: ScoreSource,
    pub policy: PolicyConfig,
    /// Detector noise; `noise.seed` is the master seed of the per-episode
    /// detector streams.
    pub noise: NoiseModel,
    pub success_distance: f64,
    /// Farthest range at which objects can be detected at all.
    pub long_range_m: f64,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Write per-step traces (and the generated worlds) for export.
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            world: WorldSource::Generate {
                config: WorldGenConfig::household(),
                worlds: 20,
                seed: 0,
            },
            episodes_per_world: 1,
            episode_seed: 0,
            goals: None,
            vocabulary: None,
            scores: ScoreSource::Priors,
            policy: PolicyConfig::default(),
            noise: NoiseModel::default(),
            success_distance: DEFAULT_SUCCESS_DISTANCE_M,
            long_range_m: 10.0,
            output_dir: None,
            threads: 0,
            trace: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Config {
            field: "<file>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = read_file(path)?;
        serde_json::from_str(&s).map_err(|e| HarnessError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, message: String| {
            Err(HarnessError::Config {
                field: field.into(),
                message,
            })
        };
        if let Err(e) = self.policy.validate() {
            return bad("policy", e.to_string());
        }
        if let Err(e) = self.noise.validate() {
            return bad("noise", e.to_string());
        }
        if !(self.success_distance > 0.0) {
            return bad(
                "success_distance",
                format!("must be positive, got {}", self.success_distance),
            );
        }
        if !(self.long_range_m > 0.0) {
            return bad("long_range_m", format!("must be positive, got {}", self.long_range_m));
        }
        if let WorldSource::Files { worlds, .. } = &self.world {
            if worlds.is_empty() {
                return bad("world.worlds", "no world files listed".into());
            }
        }
        if let ScoreSource::Endpoint { endpoint } = &self.scores {
            if let Err(e) = endpoint.validate() {
                return bad("scores.endpoint", e.to_string());
            }
        }
        Ok(())
    }

    /// The vocabulary file if one is set, else the default.
    pub fn load_vocabulary(&self) -> Result<Vocabulary, HarnessError> {
        match &self.vocabulary {
            None => Ok(Vocabulary::default()),
            Some(p) => Vocabulary::from_json(&read_file(p)?).map_err(|e| HarnessError::Json {
                path: p.clone(),
                message: e.to_string(),
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", .path.display())]
    Json { path: PathBuf, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Scores(#[from] ScoreError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("episode {episode} has no step {step}; valid steps are {first}..={last}")]
    StepOutOfRange {
        episode: usize,
        step: usize,
        first: usize,
        last: usize,
    },
    #[error("trace has no steps for episode {0}")]
    MissingEpisode(usize),
}

pub(crate) fn read_file(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests;
