//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the report is printed in order and
//! the timing criteria are not disturbed by concurrently running tests.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{heap_distances, oracle_anchor, oracle_frontiers, random_navmap, rng, RandomProgram};
use softnav_core::grid::Cell;
use softnav_core::harness::{build_suite, resolve_scores, run_benchmark, run_episode_with, RunConfig, WorldSource};
use softnav_core::mapping::{extract_frontiers, CellState};
use softnav_core::metrics::{compute_metrics, outcome_counts, softspl_term, spl_term, EpisodeRecord, Outcome};
use softnav_core::policy::PolicyConfig;
use softnav_core::softlogic::{
    luk, solve_continuous, solve_one_hot, Assignment, AtomKey, Literal, Pruning, SubgradientOptions,
};
use softnav_core::world::WorldGenConfig;
use softnav_core::{Atom, Grounding, MetricsSummary, RuleTemplate};

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        println!("criterion {id:>2}  {}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

fn lukasiewicz_algebra(r: &mut Report) {
    let mut g = rng(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut in_range = true;
    for i in 0..10_000 {
        let (a, b): (f64, f64) = match i % 10 {
            0 => (0.0, g.gen()),
            1 => (1.0, g.gen()),
            _ => (g.gen(), g.gen()),
        };
        let gaps = [
            luk::and(a, b) - luk::and(b, a),
            luk::or(a, b) - luk::or(b, a),
            luk::and(a, 1.0) - a,
            luk::or(a, 0.0) - a,
            luk::neg(luk::and(a, b)) - luk::or(luk::neg(a), luk::neg(b)),
            luk::neg(luk::or(a, b)) - luk::and(luk::neg(a), luk::neg(b)),
        ];
        worst = gaps.iter().fold(worst, |w, g| w.max(g.abs()));
        for v in [luk::and(a, b), luk::or(a, b), luk::neg(a), luk::implies(a, b)] {
            in_range &= (0.0..=1.0).contains(&v);
        }
    }
    let t = start.elapsed();
    r.record(
        1,
        in_range && worst <= 1e-12 && t < Duration::from_secs(1),
        format!(
            "Lukasiewicz algebra on 10000 pairs: max law error {worst:.1e}, results in [0, 1]: {in_range}, {}",
            secs(t)
        ),
    );
}

fn worked_example(r: &mut Report) {
    let atoms = vec![
        Atom::observed(AtomKey::new("IsCooccur", ["tv", "couch"]), 0.8),
        Atom::observed(AtomKey::new("IsNearObj", ["f0", "couch"]), 0.8),
        Atom::target(AtomKey::new("ChooseFrontier", ["f0"])),
    ];
    let rule = RuleTemplate::new(
        "object",
        1.0,
        vec![
            Literal::new("IsCooccur", &["G", "O"]),
            Literal::new("IsNearObj", &["F", "O"]),
        ],
        Literal::new("ChooseFrontier", &["F"]),
    );
    let g = Grounding::build(
        atoms,
        vec![rule],
        &[vec![AtomKey::new("ChooseFrontier", ["f0"])]],
        Pruning::None,
    )
    .expect("grounding builds");
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let y = k as f64 / 100.0;
        let d = g.rule_distance(&g.rules()[0], &Assignment(vec![y])).expect("distance");
        worst = worst.max((d - (0.6 - y).max(0.0)).abs());
    }
    let at0 = g.rule_distance(&g.rules()[0], &Assignment(vec![0.0])).unwrap();
    r.record(
        2,
        worst <= 1e-9 && (at0 - 0.6).abs() <= 1e-9,
        format!("x1=x2=0.8: distance(y1=0) = {at0:.12}, max |d - max(0, 0.6 - y1)| over 101 points {worst:.1e}"),
    );
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Criteria 3 and 7 share the instances.
fn solvers(r: &mut Report) {
    const REPS: u32 = 20;
    let mut g = rng(3);
    let start = Instant::now();
    let (mut mismatches, mut bound_violations) = (0, 0);
    let mut worst_gap = f64::NEG_INFINITY;
    let (mut t_one, mut t_cont) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let prog = RandomProgram::sample(&mut g, 8, 10);
        let grounding = prog.grounding(Pruning::ZeroBody);
        let sol = solve_one_hot(&grounding).expect("one-hot solves");
        let (want, want_e) = prog.oracle_choice();
        let got = prog.frontier_of(&grounding.atoms()[sol.chosen].key);
        let energies_agree = prog
            .vertex_energies()
            .iter()
            .zip(&sol.vertex_energies)
            .all(|(a, b)| (a - b).abs() <= 1e-9);
        if got != want || (sol.energy - want_e).abs() > 1e-9 || !energies_agree {
            mismatches += 1;
        }
        let cont = solve_continuous(&grounding, SubgradientOptions::default()).expect("continuous solves");
        let gap = cont.energy - sol.energy;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-3 {
            bound_violations += 1;
        }

        let t = Instant::now();
        for _ in 0..REPS {
            std::hint::black_box(solve_one_hot(std::hint::black_box(&grounding)).unwrap());
        }
        t_one.push(t.elapsed().as_secs_f64() / REPS as f64);
        let t = Instant::now();
        for _ in 0..REPS {
            std::hint::black_box(
                solve_continuous(std::hint::black_box(&grounding), SubgradientOptions::default()).unwrap(),
            );
        }
        t_cont.push(t.elapsed().as_secs_f64() / REPS as f64);
    }
    let elapsed = start.elapsed();
    r.record(
        3,
        mismatches == 0 && bound_violations == 0 && elapsed < Duration::from_secs(30),
        format!(
            "200 random groundings: {mismatches} one-hot/oracle mismatches, {bound_violations} continuous > one-hot + 1e-3 (worst gap {worst_gap:+.2e}), {}",
            secs(elapsed)
        ),
    );
    let (m_one, m_cont) = (median(&mut t_one), median(&mut t_cont));
    r.record(
        7,
        m_one <= m_cont,
        format!(
            "median solve time: one-hot {:.2} us, continuous {:.2} us",
            m_one * 1e6,
            m_cont * 1e6
        ),
    );
}

fn gow_reduction(r: &mut Report) {
    let cfg = RunConfig {
        world: WorldSource::Generate {
            config: WorldGenConfig::household(),
            worlds: 50,
            seed: 4_000,
        },
        policy: PolicyConfig::gow(),
        ..RunConfig::default()
    };
    let vocab = cfg.load_vocabulary().expect("vocabulary");
    let suite = build_suite(&cfg, &vocab).expect("suite");
    let scores = resolve_scores(&cfg, &vocab, &suite.goals()).expect("scores");
    let (mut checked, mut agree) = (0usize, 0usize);
    let mut first_miss = None;
    for (wi, ep) in &suite.episodes {
        run_episode_with(&suite.worlds[*wi], ep, &scores[&ep.goal], &vocab, &cfg, |view| {
            let Some(choice) = &view.decision.choice else { return };
            let agent = view.agent;
            let nav = agent.nav();
            let spec = nav.spec;
            let mut excluded = agent.unreachable_anchors().clone();
            excluded.remove(&choice.anchor);
            let field = heap_distances(&spec, |c| nav.get(c) == CellState::Free, agent.pose().cell(&spec));
            let candidates: Vec<(usize, f64)> = oracle_frontiers(nav, agent.config().min_frontier_size)
                .iter()
                .enumerate()
                .filter_map(|(id, cells)| {
                    let a = oracle_anchor(cells, spec.resolution);
                    (!excluded.contains(&a)).then(|| (id, field[spec.index(a).unwrap()] * spec.resolution))
                })
                .filter(|(_, d)| d.is_finite())
                .collect();
            let far: Vec<(usize, f64)> = candidates
                .iter()
                .copied()
                .filter(|(_, d)| *d >= agent.config().d_f)
                .collect();
            let pool = if far.is_empty() { candidates } else { far };
            let want = pool
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(id, _)| *id);
            let same_pool = pool.iter().map(|p| p.0).collect::<BTreeSet<_>>()
                == choice.candidates.iter().map(|c| c.0).collect::<BTreeSet<_>>();
            checked += 1;
            if want == Some(choice.frontier_id) && same_pool {
                agree += 1;
            } else if first_miss.is_none() {
                first_miss = Some(format!(
                    "episode {} step {}: chose {}, oracle {want:?}",
                    ep.id, view.step, choice.frontier_id
                ));
            }
        });
    }
    let mut detail = format!(
        "GoW on {} episodes: {agree}/{checked} frontier selections equal the nearest eligible frontier",
        suite.episodes.len()
    );
    if let Some(m) = first_miss {
        detail.push_str(&format!(" (first miss: {m})"));
    }
    r.record(4, checked > 0 && agree == checked && suite.episodes.len() == 50, detail);
}

fn frontier_oracle(r: &mut Report) {
    let mut g = rng(5);
    let mut equal = 0;
    let mut frontiers = 0;
    for i in 0..100 {
        let nav = random_navmap(&mut g, 40, 40);
        let min_size = 1 + i % 3;
        let got: Vec<Vec<Cell>> = extract_frontiers(&nav, min_size).into_iter().map(|f| f.cells).collect();
        let want = oracle_frontiers(&nav, min_size);
        frontiers += want.len();
        equal += (got == want) as usize;
    }
    r.record(
        5,
        equal == 100,
        format!("{equal}/100 random 40x40 maps match the union-find oracle cell for cell ({frontiers} frontiers)"),
    );
}

struct Suite {
    esc: MetricsSummary,
    gow: MetricsSummary,
    room: MetricsSummary,
    object: MetricsSummary,
    records: Vec<Vec<EpisodeRecord>>,
}

fn benchmark_suite() -> (Suite, Duration) {
    let base = RunConfig {
        world: WorldSource::Generate {
            config: WorldGenConfig::household(),
            worlds: 200,
            seed: 0,
        },
        ..RunConfig::default()
    };
    let start = Instant::now();
    let mut records = Vec::new();
    let mut run = |policy: PolicyConfig| {
        let out = run_benchmark(&RunConfig { policy, ..base.clone() }).expect("benchmark runs");
        records.push(out.records);
        out.summary
    };
    let esc = run(PolicyConfig::default());
    let gow = run(PolicyConfig::gow());
    let room = run(PolicyConfig::room_only());
    let object = run(PolicyConfig::object_only());
    (
        Suite {
            esc,
            gow,
            room,
            object,
            records,
        },
        start.elapsed(),
    )
}

fn directional(r: &mut Report, s: &Suite, elapsed: Duration) {
    let (e, g) = (&s.esc, &s.gow);
    let sr_gain = 100.0 * (e.sr - g.sr);
    let (fe, fg) = (e.frontier_dist.unwrap_or(f64::NAN), g.frontier_dist.unwrap_or(f64::NAN));
    let pass =
        sr_gain >= 5.0 && fe < fg && e.errors.exploration < g.errors.exploration && elapsed < Duration::from_secs(300);
    r.record(
        6,
        pass,
        format!(
            "200 worlds, ESC vs GoW: SR {:.1} vs {:.1} ({sr_gain:+.1} pts), FrontierDist {fe:.2} vs {fg:.2} m, exploration error {:.1}% vs {:.1}%, 4 suites in {}",
            100.0 * e.sr,
            100.0 * g.sr,
            100.0 * e.errors.exploration,
            100.0 * g.errors.exploration,
            secs(elapsed)
        ),
    );
}

fn metric_identities(r: &mut Report, s: &Suite) {
    let mut ok = true;
    let mut episodes = 0;
    for recs in &s.records {
        let sum: MetricsSummary = compute_metrics(recs).expect("metrics");
        ok &= sum.spl <= sum.sr && (0.0..=1.0).contains(&sum.softspl);
        let counts = outcome_counts(recs);
        let failures: usize = counts
            .iter()
            .filter(|(o, _)| **o != Outcome::Success)
            .map(|(_, n)| n)
            .sum();
        let successes = recs.iter().filter(|r| r.success).count();
        ok &= counts.values().sum::<usize>() == recs.len() && failures == recs.len() - successes;
        for rec in recs {
            let spl = spl_term(rec.success, rec.shortest, rec.path_length);
            let soft = softspl_term(rec.initial_distance, rec.final_distance, rec.shortest, rec.path_length);
            ok &= spl <= rec.success as u8 as f64 && (0.0..=1.0).contains(&soft);
            ok &= spl_term(true, rec.shortest, rec.shortest) == 1.0;
        }
        episodes += recs.len();
    }
    r.record(
        8,
        ok,
        format!("SPL <= SR, SPL term 1 at p = l, SoftSPL in [0, 1], taxonomy partitions failures: {} runs, {episodes} episodes", s.records.len()),
    );
}

fn ablations(r: &mut Report, s: &Suite) {
    r.record(
        9,
        s.room.sr >= s.gow.sr && s.object.sr >= s.gow.sr,
        format!(
            "SR room-only {:.1}, object-only {:.1}, GoW {:.1}",
            100.0 * s.room.sr,
            100.0 * s.object.sr,
            100.0 * s.gow.sr
        ),
    );
}

fn determinism(r: &mut Report) {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let run = |dir: &std::path::Path| {
        let cfg = RunConfig {
            world: WorldSource::Generate {
                config: WorldGenConfig::household(),
                worlds: 24,
                seed: 10_000,
            },
            output_dir: Some(dir.to_path_buf()),
            ..RunConfig::default()
        };
        run_benchmark(&cfg).expect("benchmark runs");
        std::fs::read(dir.join("episodes.jsonl")).expect("episodes written")
    };
    let a = run(dirs[0].path());
    let b = run(dirs[1].path());
    r.record(
        10,
        a == b && !a.is_empty(),
        format!(
            "two runs of one config: episodes.jsonl {} and {} bytes, identical={}",
            a.len(),
            b.len(),
            a == b
        ),
    );
}

fn main() {
    let mut r = Report { lines: Vec::new() };
    lukasiewicz_algebra(&mut r);
    worked_example(&mut r);
    solvers(&mut r);
    gow_reduction(&mut r);
    frontier_oracle(&mut r);
    let (suite, elapsed) = benchmark_suite();
    directional(&mut r, &suite, elapsed);
    metric_identities(&mut r, &suite);
    ablations(&mut r, &suite);
    determinism(&mut r);

    r.lines.sort_by_key(|l| l.0);
    let failed: Vec<usize> = r.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        r.lines.len() - failed.len(),
        r.lines.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
