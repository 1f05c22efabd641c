//! Goal co-occurrence scores for objects and rooms.
//!
//! Scores come from a static [`ScoreTable`] (the offline default) or from a
//! chat-completion endpoint via [`LlmScorer`]. Every scorer returns a map that
//! is complete over the requested candidates with values in `[0, 1]`.

mod llm;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::WorldGenConfig;

pub use llm::{
    parse_reply, request_body, request_key, ChatTransport, LlmEndpointConfig, LlmScorer, PromptTemplate, UreqTransport,
};

/// Score used for candidates the source says nothing about.
pub const UNKNOWN_SCORE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Object,
    Room,
}

pub type Scores = BTreeMap<String, f64>;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("score table has no entry for goal `{0}`")]
    MissingGoal(String),
    #[error("no candidates to score")]
    NoCandidates,
    #[error("score {value} for `{goal}`/`{label}` outside [0, 1]")]
    OutOfRange { goal: String, label: String, value: f64 },
    #[error("request to {endpoint} failed: {message}")]
    Http { endpoint: String, message: String },
    #[error("could not parse any scores from reply: {raw:?}")]
    Unparseable { raw: String },
    #[error("score file {path}: {message}")]
    File { path: String, message: String },
}

/// Anything that can rate how likely `goal` is near/inside each candidate.
pub trait Scorer: Send + Sync {
    fn score_candidates(&self, goal: &str, candidates: &[String], level: Level) -> Result<Scores, ScoreError>;
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalScores {
    #[serde(default)]
    pub objects: Scores,
    #[serde(default)]
    pub rooms: Scores,
}

impl GoalScores {
    fn level(&self, level: Level) -> &Scores {
        match level {
            Level::Object => &self.objects,
            Level::Room => &self.rooms,
        }
    }
}

/// `goal -> {objects: {label: score}, rooms: {label: score}}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreTable(pub BTreeMap<String, GoalScores>);

impl ScoreTable {
    pub fn from_json(s: &str) -> Result<Self, ScoreError> {
        let t: Self = serde_json::from_str(s).map_err(|e| ScoreError::File {
            path: "<score table>".into(),
            message: e.to_string(),
        })?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("score table serialises")
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        for (goal, gs) in &self.0 {
            for (label, &value) in gs.objects.iter().chain(&gs.rooms) {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ScoreError::OutOfRange {
                        goal: goal.clone(),
                        label: label.clone(),
                        value,
                    });
                }
            }
        }
        Ok(())
    }

    /// Add every listed goal/candidate pair that is missing, at
    /// [`UNKNOWN_SCORE`].
    pub fn complete(&mut self, goals: &[String], objects: &[String], rooms: &[String]) {
        for g in goals {
            let e = self.0.entry(g.clone()).or_default();
            for o in objects {
                e.objects.entry(o.clone()).or_insert(UNKNOWN_SCORE);
            }
            for r in rooms {
                e.rooms.entry(r.clone()).or_insert(UNKNOWN_SCORE);
            }
        }
    }

    /// Scores implied by a generator's placement priors.
    ///
    /// Room score: the goal's placement prior in that room. Object score: the
    /// goal's prior averaged over rooms, weighted by the object's own prior,
    /// rescaled so the best non-goal object of each goal scores 1.
    pub fn from_priors(cfg: &WorldGenConfig) -> Self {
        let mut table = BTreeMap::new();
        for goal in &cfg.objects {
            let rooms: Scores = cfg.rooms.iter().map(|r| (r.clone(), cfg.prior(goal, r))).collect();
            let mut objects = Scores::new();
            for o in &cfg.objects {
                let mass: f64 = cfg.rooms.iter().map(|r| cfg.prior(o, r)).sum();
                let joint: f64 = cfg.rooms.iter().map(|r| cfg.prior(o, r) * cfg.prior(goal, r)).sum();
                let s = if mass > 0.0 { joint / mass } else { 0.0 };
                objects.insert(o.clone(), s);
            }
            let top = objects
                .iter()
                .filter(|(o, _)| *o != goal)
                .map(|(_, &s)| s)
                .fold(0.0, f64::max);
            for (o, s) in objects.iter_mut() {
                *s = if o == goal {
                    1.0
                } else if top > 0.0 {
                    *s / top
                } else {
                    0.0
                };
            }
            table.insert(goal.clone(), GoalScores { objects, rooms });
        }
        Self(table)
    }

    /// The table matching [`WorldGenConfig::household`].
    pub fn household() -> Self {
        Self::from_priors(&WorldGenConfig::household())
    }
}

impl Scorer for ScoreTable {
    fn score_candidates(&self, goal: &str, candidates: &[String], level: Level) -> Result<Scores, ScoreError> {
        if candidates.is_empty() {
            return Err(ScoreError::NoCandidates);
        }
        let gs = self
            .0
            .get(goal)
            .ok_or_else(|| ScoreError::MissingGoal(goal.to_string()))?;
        let m = gs.level(level);
        Ok(candidates
            .iter()
            .map(|c| (c.clone(), m.get(c).copied().unwrap_or(UNKNOWN_SCORE)))
            .collect())
    }
}

type CacheKey = (String, Vec<String>, Level);

/// Memoises another scorer per (goal, candidate set, level).
pub struct CachedScorer<S> {
    inner: S,
    cache: Mutex<HashMap<CacheKey, Scores>>,
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn score_candidates(&self, goal: &str, candidates: &[String], level: Level) -> Result<Scores, ScoreError> {
        let mut set = candidates.to_vec();
        set.sort();
        set.dedup();
        let key = (goal.to_string(), set, level);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let scores = self.inner.score_candidates(goal, candidates, level)?;
        self.cache.lock().unwrap().insert(key, scores.clone());
        Ok(scores)
    }
}

/// Min-max normalisation into `[0, 1]`; a constant map becomes all 0.5.
pub fn normalize_scores(raw: &Scores) -> Scores {
    let lo = raw.values().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.values().copied().fold(f64::NEG_INFINITY, f64::max);
    raw.iter()
        .map(|(k, &v)| {
            let n = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            (k.clone(), n)
        })
        .collect()
}
