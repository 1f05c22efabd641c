use super::*;
use crate::metrics::MetricsError;

fn small(worlds: usize) -> RunConfig {
    RunConfig {
        world: WorldSource::Generate {
            config: WorldGenConfig::household(),
            worlds,
            seed: 5,
        },
        policy: PolicyConfig {
            max_steps: 150,
            ..PolicyConfig::default()
        },
        ..RunConfig::default()
    }
}

fn jsonl(records: &[crate::metrics::EpisodeRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect()
}

#[test]
fn zero_episodes_is_rejected_at_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        episodes_per_world: 0,
        output_dir: Some(dir.path().to_path_buf()),
        ..small(1)
    };
    let err = run_benchmark(&cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Metrics(MetricsError::Empty)), "{err}");
    assert!(err.to_string().contains("record count 0"));
    assert_eq!(std::fs::read_to_string(dir.path().join("episodes.jsonl")).unwrap(), "");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn parallel_and_serial_runs_agree() {
    let serial = run_benchmark(&RunConfig { threads: 1, ..small(3) }).unwrap();
    let parallel = run_benchmark(&RunConfig { threads: 3, ..small(3) }).unwrap();
    assert_eq!(jsonl(&serial.records), jsonl(&parallel.records));
    assert_eq!(serial.summary, parallel.summary);
    let ids: Vec<usize> = serial.records.iter().map(|r| r.episode_id).collect();
    assert_eq!(ids, vec![0, 1, 2]);
}

#[test]
fn goals_rotate_across_worlds() {
    let cfg = small(4);
    let vocab = cfg.load_vocabulary().unwrap();
    let suite = build_suite(&cfg, &vocab).unwrap();
    assert_eq!(suite.episodes.len(), 4);
    assert!(suite.goals().len() > 1, "{:?}", suite.goals());
}

#[test]
fn outputs_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: Some(dir.path().to_path_buf()),
        trace: true,
        ..small(1)
    };
    let out = run_benchmark(&cfg).unwrap();
    for f in [
        "episodes.jsonl",
        "summary.json",
        "timing.jsonl",
        "trace.jsonl",
        "config.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.get("sr").is_some());
    let trace: Vec<TraceStep> = read_jsonl(&dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(trace.len(), out.records[0].actions);
    let back = RunConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn export_map_ranges() {
    let cfg = RunConfig {
        trace: true,
        ..small(1)
    };
    let out = run_benchmark(&cfg).unwrap();
    let w = crate::world::generate_world(&WorldGenConfig::household(), 5).unwrap();
    let first = export_map(&out.traces, &w, 0, 0).unwrap();
    assert_eq!(first.overlay.path.len(), 1);
    assert_eq!(first.overlay.frontier, None);
    assert!(first.pgm.starts_with(b"P5\n80 80\n255\n"));
    assert_eq!(first.ppm.len(), b"P6\n80 80\n255\n".len() + 80 * 80 * 3);
    let last = out.traces.last().unwrap().step;
    let end = export_map(&out.traces, &w, 0, last).unwrap();
    assert!(end.overlay.path.len() > 1);
    let err = export_map(&out.traces, &w, 0, 10_000).unwrap_err().to_string();
    assert!(err.contains(&format!("0..={last}")), "{err}");
    assert!(matches!(
        export_map(&out.traces, &w, 7, 0),
        Err(HarnessError::MissingEpisode(7))
    ));
}

#[test]
fn config_errors_name_the_field() {
    let cfg = RunConfig {
        success_distance: 0.0,
        ..RunConfig::default()
    };
    assert!(cfg.validate().unwrap_err().to_string().contains("success_distance"));
    let cfg = RunConfig {
        policy: PolicyConfig {
            p: 3,
            ..PolicyConfig::default()
        },
        ..RunConfig::default()
    };
    assert!(cfg.validate().unwrap_err().to_string().contains("`policy`"));
    let cfg = RunConfig {
        world: WorldSource::Files {
            worlds: vec![],
            episodes: None,
        },
        ..RunConfig::default()
    };
    assert!(cfg.validate().unwrap_err().to_string().contains("world.worlds"));
    let missing = RunConfig {
        world: WorldSource::Files {
            worlds: vec!["/nonexistent/world.json".into()],
            episodes: None,
        },
        ..RunConfig::default()
    };
    assert!(run_benchmark(&missing)
        .unwrap_err()
        .to_string()
        .contains("/nonexistent/world.json"));
}

#[test]
fn config_json_defaults() {
    let cfg =
        RunConfig::from_json(r#"{"world": {"kind": "generate", "worlds": 2, "seed": 9}, "policy": {"mode": "gow"}}"#)
            .unwrap();
    assert_eq!(cfg.policy.mode, crate::policy::Mode::Gow);
    assert_eq!(cfg.policy.d_f, 1.6);
    assert_eq!(cfg.scores, ScoreSource::Priors);
    assert!(RunConfig::from_json(r#"{"world": {"kind": "both"}}"#).is_err());
}
