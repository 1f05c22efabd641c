//! Suites, benchmark runs, paired comparisons and JSONL persistence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::commonsense::{CachedScorer, Level, LlmScorer, ScoreTable, Scorer, UreqTransport};
use crate::metrics::{compute_metrics, EpisodeRecord, Summary};
use crate::perception::Vocabulary;
use crate::policy::{CooccurScores, PolicyConfig};
use crate::world::{generate_world, make_episodes, Episode, GridWorld, WorldGenConfig};

use super::episode::{run_episode, EpisodeRun, EpisodeTiming, TraceStep};
use super::{read_file, write_file, HarnessError, RunConfig, ScoreSource, WorldSource};

/// Worlds and the episodes to run in them.
#[derive(Clone, Debug)]
pub struct Suite {
    pub worlds: Vec<GridWorld>,
    /// (index into `worlds`, episode), ordered by episode id.
    pub episodes: Vec<(usize, Episode)>,
}

impl Suite {
    pub fn goals(&self) -> Vec<String> {
        let mut g: Vec<String> = self.episodes.iter().map(|(_, e)| e.goal.clone()).collect();
        g.sort();
        g.dedup();
        g
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("record serialises"));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let text = read_file(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Json {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

pub fn load_episodes(path: &Path) -> Result<Vec<Episode>, HarnessError> {
    read_jsonl(path)
}

fn goal_list(cfg: &RunConfig, vocab: &Vocabulary) -> Vec<String> {
    cfg.goals.clone().unwrap_or_else(|| vocab.goal_objects.clone())
}

fn gen_config(cfg: &RunConfig) -> WorldGenConfig {
    match &cfg.world {
        WorldSource::Generate { config, .. } => config.clone(),
        WorldSource::Files { .. } => WorldGenConfig::household(),
    }
}

/// Load or generate the worlds and episodes named by `cfg`.
///
/// Generated suites rotate the goal list by the world index so that one
/// episode per world still cycles through every category.
pub fn build_suite(cfg: &RunConfig, vocab: &Vocabulary) -> Result<Suite, HarnessError> {
    let goals = goal_list(cfg, vocab);
    if goals.is_empty() {
        return Err(HarnessError::Config {
            field: "goals".into(),
            message: "no goal categories".into(),
        });
    }
    let mut worlds = Vec::new();
    let mut episodes = Vec::new();
    let sample = |wi: usize, w: &GridWorld, episodes: &mut Vec<(usize, Episode)>| {
        let mut rotated = goals.clone();
        rotated.rotate_left(wi % goals.len());
        let (eps, _) = make_episodes(
            w,
            &rotated,
            cfg.episodes_per_world,
            cfg.episode_seed.wrapping_add(w.seed),
        );
        for mut e in eps {
            e.id = episodes.len();
            episodes.push((wi, e));
        }
    };
    match &cfg.world {
        WorldSource::Generate {
            config,
            worlds: n,
            seed,
        } => {
            for i in 0..*n {
                let w = generate_world(config, seed.wrapping_add(i as u64))?;
                sample(i, &w, &mut episodes);
                worlds.push(w);
            }
        }
        WorldSource::Files {
            worlds: paths,
            episodes: file,
        } => {
            for p in paths {
                let w = GridWorld::from_json(&read_file(p)?).map_err(|e| HarnessError::Json {
                    path: p.clone(),
                    message: e.to_string(),
                })?;
                worlds.push(w);
            }
            match file {
                None => {
                    for (i, w) in worlds.iter().enumerate() {
                        sample(i, w, &mut episodes);
                    }
                }
                Some(path) => {
                    for e in load_episodes(path)? {
                        let wi =
                            worlds
                                .iter()
                                .position(|w| w.seed == e.world_id)
                                .ok_or_else(|| HarnessError::Json {
                                    path: path.clone(),
                                    message: format!("episode {} names world {} which is not loaded", e.id, e.world_id),
                                })?;
                        episodes.push((wi, e));
                    }
                    episodes.sort_by_key(|(_, e)| e.id);
                }
            }
        }
    }
    Ok(Suite { worlds, episodes })
}

fn scorer(cfg: &RunConfig) -> Result<Box<dyn Scorer>, HarnessError> {
    Ok(match &cfg.scores {
        ScoreSource::Priors => Box::new(ScoreTable::from_priors(&gen_config(cfg))),
        ScoreSource::Table { path } => {
            let t = ScoreTable::from_json(&read_file(path)?).map_err(|e| HarnessError::Json {
                path: path.clone(),
                message: e.to_string(),
            })?;
            Box::new(t)
        }
        ScoreSource::Endpoint { endpoint } => {
            Box::new(CachedScorer::new(LlmScorer::new(endpoint.clone(), UreqTransport)?))
        }
    })
}

/// Co-occurrence scores for every goal over the vocabulary.
pub fn resolve_scores(
    cfg: &RunConfig,
    vocab: &Vocabulary,
    goals: &[String],
) -> Result<BTreeMap<String, CooccurScores>, HarnessError> {
    let s = scorer(cfg)?;
    let objects = vocab.objects();
    let mut out = BTreeMap::new();
    for g in goals {
        let sc = CooccurScores {
            objects: s.score_candidates(g, &objects, Level::Object)?,
            rooms: s.score_candidates(g, &vocab.rooms, Level::Room)?,
        };
        out.insert(g.clone(), sc);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BenchmarkOutput {
    pub records: Vec<EpisodeRecord>,
    pub timings: Vec<EpisodeTiming>,
    pub traces: Vec<TraceStep>,
    pub summary: Summary<f64>,
}

/// Run every episode of the suite and persist the results when an output
/// directory is set.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkOutput, HarnessError> {
    cfg.validate()?;
    let vocab = cfg.load_vocabulary()?;
    let suite = build_suite(cfg, &vocab)?;
    let scores = resolve_scores(cfg, &vocab, &suite.goals())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Config {
            field: "threads".into(),
            message: e.to_string(),
        })?;
    let runs: Vec<EpisodeRun> = pool.install(|| {
        suite
            .episodes
            .par_iter()
            .map(|(wi, ep)| run_episode(&suite.worlds[*wi], ep, &scores[&ep.goal], &vocab, cfg))
            .collect()
    });
    let mut records = Vec::with_capacity(runs.len());
    let mut timings = Vec::with_capacity(runs.len());
    let mut traces = Vec::new();
    for r in runs {
        records.push(r.record);
        timings.push(r.timing);
        traces.extend(r.trace);
    }
    if let Some(dir) = &cfg.output_dir {
        write_jsonl(&dir.join("episodes.jsonl"), &records)?;
        write_jsonl(&dir.join("timing.jsonl"), &timings)?;
        let resolved = serde_json::to_string_pretty(cfg).expect("config serialises");
        write_file(&dir.join("config.json"), resolved.as_bytes())?;
        if cfg.trace {
            write_jsonl(&dir.join("trace.jsonl"), &traces)?;
            for w in &suite.worlds {
                write_file(&world_path(dir, w.seed), w.to_json().as_bytes())?;
            }
        }
    }
    let summary = compute_metrics::<f64>(&records)?;
    if let Some(dir) = &cfg.output_dir {
        write_file(&dir.join("summary.json"), summary.to_json().as_bytes())?;
    }
    Ok(BenchmarkOutput {
        records,
        timings,
        traces,
        summary,
    })
}

/// Where traced runs store the world with seed `seed`.
pub(crate) fn world_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join("worlds").join(format!("world_{seed}.json"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub sr: f64,
    pub spl: f64,
    pub softspl: f64,
    pub frontier_dist: Option<f64>,
    pub exploration_error: f64,
    pub detection_error: f64,
    pub planning_error: f64,
}

/// Paired results of two policies on the same suite; `delta` is `a - b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Summary<f64>,
    pub b: Summary<f64>,
    pub delta: Delta,
}

pub fn compare(cfg: &RunConfig, a: &PolicyConfig, b: &PolicyConfig) -> Result<Comparison, HarnessError> {
    let run = |p: &PolicyConfig, sub: &str| {
        let c = RunConfig {
            policy: p.clone(),
            output_dir: cfg.output_dir.as_ref().map(|d| d.join(sub)),
            ..cfg.clone()
        };
        run_benchmark(&c).map(|o| o.summary)
    };
    let sa = run(a, "a")?;
    let sb = run(b, "b")?;
    let delta = Delta {
        sr: sa.sr - sb.sr,
        spl: sa.spl - sb.spl,
        softspl: sa.softspl - sb.softspl,
        frontier_dist: sa.frontier_dist.zip(sb.frontier_dist).map(|(x, y)| x - y),
        exploration_error: sa.errors.exploration - sb.errors.exploration,
        detection_error: sa.errors.detection - sb.errors.detection,
        planning_error: sa.errors.planning - sb.errors.planning,
    };
    let out = Comparison { a: sa, b: sb, delta };
    if let Some(dir) = &cfg.output_dir {
        let json = serde_json::to_string_pretty(&out).expect("comparison serialises");
        write_file(&dir.join("compare.json"), json.as_bytes())?;
    }
    Ok(out)
}
