//! Prompt vocabularies and a noisy simulated detector.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Visible, HFOV_DEG, SENSOR_RANGE_M};

/// Detector score threshold; weaker detections are never emitted.
pub const CONFIDENCE_THRESHOLD: f64 = 0.61;

const MP3D_GOALS: [&str; 21] = [
    "chair",
    "table",
    "picture",
    "cabinet",
    "cushion",
    "sofa",
    "bed",
    "chest_of_drawers",
    "plant",
    "sink",
    "toilet",
    "stool",
    "towel",
    "tv_monitor",
    "shower",
    "bathtub",
    "counter",
    "fireplace",
    "gym_equipment",
    "seating",
    "clothes",
];

const ROOMS: [&str; 9] = [
    "bedroom",
    "living room",
    "bathroom",
    "kitchen",
    "dining room",
    "office room",
    "gym",
    "lounge",
    "laundry room",
];

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("empty prompt: no labels given")]
    EmptyPrompt,
    #[error("vocabulary list `{list}`: {reason}")]
    InvalidVocabulary { list: &'static str, reason: String },
    #[error("noise model: {0}")]
    InvalidNoise(String),
    #[error("vocabulary json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub common_objects: Vec<String>,
    pub goal_objects: Vec<String>,
    pub rooms: Vec<String>,
}

impl Default for Vocabulary {
    /// The MP3D goal categories double as the common-object list.
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self {
            common_objects: owned(&MP3D_GOALS),
            goal_objects: owned(&MP3D_GOALS),
            rooms: owned(&ROOMS),
        }
    }
}

impl Vocabulary {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        for (list, labels) in [
            ("common_objects", &self.common_objects),
            ("goal_objects", &self.goal_objects),
            ("rooms", &self.rooms),
        ] {
            let mut seen = std::collections::BTreeSet::new();
            for l in labels {
                if l.trim().is_empty() {
                    return Err(PerceptionError::InvalidVocabulary {
                        list,
                        reason: "empty label".into(),
                    });
                }
                if !seen.insert(l) {
                    return Err(PerceptionError::InvalidVocabulary {
                        list,
                        reason: format!("duplicate label `{l}`"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, PerceptionError> {
        let v: Self = serde_json::from_str(s).map_err(|e| PerceptionError::Json(e.to_string()))?;
        v.validate()?;
        Ok(v)
    }

    /// Common objects followed by goals not already listed.
    pub fn objects(&self) -> Vec<String> {
        union(&self.common_objects, &self.goal_objects)
    }

    pub fn object_prompt(&self) -> Result<String, PerceptionError> {
        build_prompt(&self.common_objects, &self.goal_objects)
    }

    pub fn room_prompt(&self) -> Result<String, PerceptionError> {
        build_prompt(&self.rooms, &[])
    }
}

fn union(a: &[String], b: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(a.len() + b.len());
    for l in a.iter().chain(b) {
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    out
}

/// Labels joined by `". "` with a final period, duplicates removed.
pub fn build_prompt(common: &[String], goals: &[String]) -> Result<String, PerceptionError> {
    let labels = union(common, goals);
    if labels.is_empty() {
        return Err(PerceptionError::EmptyPrompt);
    }
    Ok(format!("{}.", labels.join(". ")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionKind {
    Object,
    Room,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
    /// Degrees relative to the heading, positive to the left.
    pub bearing: f64,
    pub angular_extent: f64,
    pub range: f64,
    pub kind: DetectionKind,
    /// Ground-truth instance behind an object detection; `None` for rooms
    /// and false positives. Only the evaluator reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_instance: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub false_negative_rate: f64,
    pub false_positive_rate_per_step: f64,
    pub confidence_range_true: (f64, f64),
    pub confidence_range_false: (f64, f64),
    /// label -> [(replacement, probability)] applied to true detections.
    pub confusion: BTreeMap<String, Vec<(String, f64)>>,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            false_negative_rate: 0.2,
            false_positive_rate_per_step: 0.02,
            confidence_range_true: (0.65, 0.95),
            confidence_range_false: (0.61, 0.75),
            confusion: BTreeMap::new(),
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// A perfect detector.
    pub fn none() -> Self {
        Self {
            false_negative_rate: 0.0,
            false_positive_rate_per_step: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.false_negative_rate) || !unit(self.false_positive_rate_per_step) {
            return Err(PerceptionError::InvalidNoise("rates must lie in [0, 1]".into()));
        }
        for (name, (lo, hi)) in [
            ("confidence_range_true", self.confidence_range_true),
            ("confidence_range_false", self.confidence_range_false),
        ] {
            if !(lo <= hi && unit(lo) && unit(hi)) {
                return Err(PerceptionError::InvalidNoise(format!("{name} = ({lo}, {hi})")));
            }
        }
        if !(CONFIDENCE_THRESHOLD..=1.0).contains(&self.confidence_range_true.0) {
            return Err(PerceptionError::InvalidNoise(format!(
                "confidence_range_true must lie within [{CONFIDENCE_THRESHOLD}, 1]"
            )));
        }
        for (label, swaps) in &self.confusion {
            let total: f64 = swaps.iter().map(|(_, p)| p).sum();
            if swaps.iter().any(|(_, p)| !unit(*p)) || total > 1.0 + 1e-12 {
                return Err(PerceptionError::InvalidNoise(format!("confusion for `{label}`")));
            }
        }
        Ok(())
    }
}

/// The room the agent stands in and how far the room extends straight ahead.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomSighting {
    pub label: String,
    pub range: f64,
}

fn sample(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Apparent width of a 0.5 m object at `range`, in degrees.
fn object_extent(range: f64) -> f64 {
    (2.0 * (0.25f64).atan2(range.max(1e-3))).to_degrees()
}

/// Simulated detector over the ground-truth visible set.
///
/// Draws happen in a fixed order (per instance: drop, confidence, confusion;
/// then the false positive; then the room), so the output is a pure function
/// of the inputs and the RNG state.
pub fn detect(
    visible: &[Visible],
    room: Option<&RoomSighting>,
    vocab: &Vocabulary,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for v in visible {
        if rng.gen::<f64>() < noise.false_negative_rate {
            continue;
        }
        let confidence = sample(rng, noise.confidence_range_true);
        let mut label = v.instance.category.clone();
        if let Some(swaps) = noise.confusion.get(&label) {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (to, p) in swaps {
                acc += p;
                if u < acc {
                    label = to.clone();
                    break;
                }
            }
        }
        out.push(Detection {
            label,
            confidence,
            bearing: v.bearing,
            angular_extent: object_extent(v.range),
            range: v.range,
            kind: DetectionKind::Object,
            true_instance: Some(v.instance.id),
        });
    }
    let objects = vocab.objects();
    if !objects.is_empty() && rng.gen::<f64>() < noise.false_positive_rate_per_step {
        let label = objects[rng.gen_range(0..objects.len())].clone();
        let bearing = rng.gen_range(-HFOV_DEG / 2.0..=HFOV_DEG / 2.0);
        let range = rng.gen_range(0.5..=SENSOR_RANGE_M);
        let confidence = sample(rng, noise.confidence_range_false);
        out.push(Detection {
            label,
            confidence,
            bearing,
            angular_extent: object_extent(range),
            range,
            kind: DetectionKind::Object,
            true_instance: None,
        });
    }
    if let Some(r) = room {
        let confidence = sample(rng, noise.confidence_range_true);
        if r.range > 0.0 {
            out.push(Detection {
                label: r.label.clone(),
                confidence,
                bearing: 0.0,
                angular_extent: HFOV_DEG,
                range: r.range.min(SENSOR_RANGE_M),
                kind: DetectionKind::Room,
                true_instance: None,
            });
        }
    }
    out.retain(|d| d.confidence >= CONFIDENCE_THRESHOLD);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;
    use crate::world::ObjectInstance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    fn chair(id: u32, bearing: f64) -> Visible {
        Visible {
            instance: ObjectInstance {
                category: "chair".into(),
                position: Cell::new(0, 0),
                id,
            },
            range: 2.0,
            bearing,
        }
    }

    fn kitchen() -> RoomSighting {
        RoomSighting {
            label: "kitchen".into(),
            range: 3.0,
        }
    }

    #[test]
    fn prompts() {
        assert_eq!(
            build_prompt(&s(&["cabinet", "table"]), &s(&["chair", "table"])).unwrap(),
            "cabinet. table. chair."
        );
        assert_eq!(build_prompt(&[], &s(&["chair"])).unwrap(), "chair.");
        assert_eq!(build_prompt(&s(&["a"]), &s(&["a"])).unwrap(), "a.");
        assert_eq!(build_prompt(&[], &[]), Err(PerceptionError::EmptyPrompt));
    }

    #[test]
    fn default_vocabulary_prompts() {
        let v = Vocabulary::default();
        v.validate().unwrap();
        assert_eq!(
            v.room_prompt().unwrap(),
            "bedroom. living room. bathroom. kitchen. dining room. office room. gym. lounge. laundry room."
        );
        assert!(v
            .object_prompt()
            .unwrap()
            .starts_with("chair. table. picture. cabinet."));
        assert_eq!(v.objects().len(), 21);
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        let v = Vocabulary {
            common_objects: s(&["a", "a"]),
            ..Vocabulary::default()
        };
        assert!(matches!(v.validate(), Err(PerceptionError::InvalidVocabulary { .. })));
    }

    #[test]
    fn noiseless_detector_is_an_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = detect(
            &[chair(1, 10.0), chair(2, -20.0)],
            Some(&kitchen()),
            &Vocabulary::default(),
            &NoiseModel::none(),
            &mut rng,
        );
        assert_eq!(d.len(), 3);
        let chairs: Vec<_> = d.iter().filter(|d| d.label == "chair").collect();
        assert_eq!(chairs.len(), 2);
        for c in chairs {
            assert!((0.65..=0.95).contains(&c.confidence));
        }
        assert_eq!(d[2].kind, DetectionKind::Room);
        assert_eq!(d[2].angular_extent, HFOV_DEG);
    }

    #[test]
    fn all_dropped_leaves_room() {
        let noise = NoiseModel {
            false_negative_rate: 1.0,
            false_positive_rate_per_step: 0.0,
            ..NoiseModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = detect(
            &[chair(1, 0.0)],
            Some(&kitchen()),
            &Vocabulary::default(),
            &noise,
            &mut rng,
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DetectionKind::Room);
    }

    #[test]
    fn detector_is_deterministic() {
        let vis = [chair(1, 0.0), chair(2, 5.0), chair(3, -5.0)];
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            detect(
                &vis,
                Some(&kitchen()),
                &Vocabulary::default(),
                &NoiseModel::default(),
                &mut rng,
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn confusion_swaps_labels() {
        let mut noise = NoiseModel::none();
        noise.confusion.insert("chair".into(), vec![("stool".into(), 1.0)]);
        noise.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = detect(&[chair(1, 0.0)], None, &Vocabulary::default(), &noise, &mut rng);
        assert_eq!(d[0].label, "stool");
        assert_eq!(d[0].true_instance, Some(1));
    }

    #[test]
    fn invalid_noise_rejected() {
        let n = NoiseModel {
            confidence_range_true: (0.9, 0.7),
            ..NoiseModel::default()
        };
        assert!(n.validate().is_err());
        let n = NoiseModel {
            false_negative_rate: 1.5,
            ..NoiseModel::default()
        };
        assert!(n.validate().is_err());
    }
}
