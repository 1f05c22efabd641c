//! Episode scoring, exploration quality and failure taxonomy.
//!
//! Per-episode records are plain `f64`; aggregation is generic over the
//! scalar so the identities can be checked in either precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::StopReason;
use crate::scalar::{clamp_unit, Real};

/// Window length and radius of the stuck test.
pub const STUCK_WINDOW_STEPS: usize = 400;
pub const STUCK_RADIUS_M: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChosenFrontier {
    pub step: usize,
    pub centroid: (f64, f64),
    /// Geodesic distance from the frontier to the nearest goal instance.
    pub goal_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: usize,
    pub world_id: u64,
    pub goal: String,
    pub success: bool,
    /// Realised path length, meters.
    pub path_length: f64,
    /// Shortest geodesic from start to the goal, meters.
    pub shortest: f64,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub chosen_frontiers: Vec<ChosenFrontier>,
    pub ever_saw_goal: bool,
    pub ever_detected_goal: bool,
    pub false_goal_detection_acted: bool,
    pub stuck: bool,
    pub actions: usize,
    pub stop_reason: Option<StopReason>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    DetectionError,
    PlanningError,
    ExplorationError,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no episode records to aggregate (record count 0)")]
    Empty,
    #[error("episode {episode}: shortest path length {value} must be positive")]
    NonPositiveShortest { episode: usize, value: f64 },
    #[error("episode {episode}: {field} = {value} is invalid")]
    InvalidField {
        episode: usize,
        field: &'static str,
        value: f64,
    },
}

impl EpisodeRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.shortest > 0.0 && self.shortest.is_finite()) {
            return Err(MetricsError::NonPositiveShortest {
                episode: self.episode_id,
                value: self.shortest,
            });
        }
        for (field, value) in [
            ("path_length", self.path_length),
            ("initial_distance", self.initial_distance),
            ("final_distance", self.final_distance),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(MetricsError::InvalidField {
                    episode: self.episode_id,
                    field,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Success weighted by `l / max(p, l)`.
pub fn spl_term<T: Real>(success: bool, shortest: T, path: T) -> T {
    if !success {
        return T::zero();
    }
    shortest / path.max(shortest)
}

/// Distance progress weighted by `l / max(p, l)`.
pub fn softspl_term<T: Real>(initial: T, final_distance: T, shortest: T, path: T) -> T {
    let progress = if initial > T::zero() {
        clamp_unit(T::one() - final_distance / initial)
    } else {
        T::one()
    };
    progress * shortest / path.max(shortest)
}

/// Whether some window of [`STUCK_WINDOW_STEPS`] positions stays within
/// [`STUCK_RADIUS_M`] of the window's first position.
pub fn is_stuck(positions: &[(f64, f64)]) -> bool {
    if positions.len() < STUCK_WINDOW_STEPS {
        return false;
    }
    positions.windows(STUCK_WINDOW_STEPS).any(|w| {
        let (x0, y0) = w[0];
        w.iter().all(|&(x, y)| (x - x0).hypot(y - y0) <= STUCK_RADIUS_M)
    })
}

/// Failure class; evaluated Planning, then Detection, then Exploration.
pub fn classify_error(r: &EpisodeRecord) -> Outcome {
    if r.success {
        Outcome::Success
    } else if r.ever_detected_goal || r.stuck {
        Outcome::PlanningError
    } else if r.ever_saw_goal || r.false_goal_detection_acted {
        Outcome::DetectionError
    } else {
        Outcome::ExplorationError
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary<T> {
    pub episodes: usize,
    pub sr: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates<T> {
    pub exploration: T,
    pub detection: T,
    pub planning: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub episodes: usize,
    pub sr: T,
    pub spl: T,
    pub softspl: T,
    /// `None` when no frontier with a finite goal distance was chosen.
    pub frontier_dist: Option<T>,
    pub per_category: BTreeMap<String, CategorySummary<T>>,
    /// Fractions of all episodes.
    pub errors: ErrorRates<T>,
}

impl<T: Real + Serialize> Summary<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }
}

fn mean<T: Real>(sum: T, n: usize) -> T {
    sum / T::lit(n as f64)
}

pub fn outcome_counts(records: &[EpisodeRecord]) -> BTreeMap<Outcome, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(classify_error(r)).or_insert(0) += 1;
    }
    out
}

pub fn compute_metrics<T: Real>(records: &[EpisodeRecord]) -> Result<Summary<T>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    for r in records {
        r.validate()?;
    }
    // fixed summation order keeps the result independent of record order
    let mut sorted: Vec<&EpisodeRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.episode_id, r.world_id));
    let n = sorted.len();
    let (mut sr, mut spl, mut soft) = (T::zero(), T::zero(), T::zero());
    let (mut fsum, mut fcount) = (T::zero(), 0usize);
    let mut cats: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in &sorted {
        let (l, p) = (T::lit(r.shortest), T::lit(r.path_length));
        if r.success {
            sr = sr + T::one();
        }
        spl = spl + spl_term(r.success, l, p);
        soft = soft + softspl_term(T::lit(r.initial_distance), T::lit(r.final_distance), l, p);
        for f in r.chosen_frontiers.iter().filter(|f| f.goal_distance.is_finite()) {
            fsum = fsum + T::lit(f.goal_distance);
            fcount += 1;
        }
        let c = cats.entry(r.goal.clone()).or_insert((0, 0));
        c.0 += 1;
        c.1 += r.success as usize;
    }
    let counts = outcome_counts(records);
    let rate = |o: Outcome| mean(T::lit(*counts.get(&o).unwrap_or(&0) as f64), n);
    Ok(Summary {
        episodes: n,
        sr: mean(sr, n),
        spl: mean(spl, n),
        softspl: mean(soft, n),
        frontier_dist: (fcount > 0).then(|| mean(fsum, fcount)),
        per_category: cats
            .into_iter()
            .map(|(k, (e, s))| {
                (
                    k,
                    CategorySummary {
                        episodes: e,
                        sr: mean(T::lit(s as f64), e),
                    },
                )
            })
            .collect(),
        errors: ErrorRates {
            exploration: rate(Outcome::ExplorationError),
            detection: rate(Outcome::DetectionError),
            planning: rate(Outcome::PlanningError),
        },
    })
}
