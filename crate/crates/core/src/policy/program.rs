//! Frontier-selection programs: atoms from the maps, rule templates from the
//! configuration, and the solver call.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::commonsense::Scores;
use crate::mapping::{free_space_field, frontier_distance_in, ContextKind, Frontier, NavMap, SemanticMap};
use crate::softlogic::{
    round_to_vertex, solve_continuous, solve_one_hot, Atom, AtomKey, Exponent, Literal, Pruning, RuleTemplate,
    SubgradientOptions, Term,
};
use crate::world::Pose;
use crate::Grounding;

use super::{Mode, PolicyConfig, PolicyError, SolverKind};

pub const IS_COOCCUR: &str = "IsCooccur";
pub const IS_NEAR_OBJ: &str = "IsNearObj";
pub const IS_NEAR_ROOM: &str = "IsNearRoom";
pub const SHORT_DIST: &str = "ShortDist";
pub const CHOOSE_FRONTIER: &str = "ChooseFrontier";

/// The goal's co-occurrence scores over the object and room vocabularies.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CooccurScores {
    pub objects: Scores,
    pub rooms: Scores,
}

/// Frontier argument used in atom keys.
pub fn frontier_arg(f: &Frontier) -> String {
    format!("f{}", f.id)
}

/// Geodesic distance over free cells from the agent to each frontier.
pub fn frontier_distances(nav: &NavMap, pose: &Pose, frontiers: &[Frontier]) -> Vec<f64> {
    let field = free_space_field(nav, pose);
    frontiers.iter().map(|f| frontier_distance_in(&field, f)).collect()
}

/// Indices of frontiers at least `d_f` away; all reachable ones when none
/// qualify. Unreachable frontiers are never eligible.
pub fn eligible_frontiers(distances: &[f64], d_f: f64) -> (Vec<usize>, bool) {
    let far: Vec<usize> = (0..distances.len())
        .filter(|&i| distances[i].is_finite() && distances[i] >= d_f)
        .collect();
    if !far.is_empty() {
        return (far, false);
    }
    (
        (0..distances.len()).filter(|&i| distances[i].is_finite()).collect(),
        true,
    )
}

/// A grounded frontier-selection problem.
#[derive(Clone, Debug)]
pub struct FrontierProgram {
    pub grounding: Grounding,
    /// Eligible frontiers, in id order.
    pub frontiers: Vec<Frontier>,
    /// Geodesic distance to each eligible frontier, aligned with `frontiers`.
    pub distances: Vec<f64>,
    /// True when no frontier was `d_f` away and the threshold was dropped.
    pub threshold_waived: bool,
}

fn templates(cfg: &PolicyConfig) -> Vec<RuleTemplate<f64>> {
    let goal = Term::Var("G".into());
    let cooccur = |v: &str| Literal::with_args(IS_COOCCUR, vec![goal.clone(), Term::Var(v.into())]);
    let choose = Literal::new(CHOOSE_FRONTIER, &["F"]);
    let mut out = Vec::new();
    if cfg.mode == Mode::Esc {
        if cfg.use_object {
            let near = Literal::new(IS_NEAR_OBJ, &["F", "O"]);
            out.push(RuleTemplate::new(
                "object",
                cfg.w_obj,
                vec![cooccur("O"), near.clone()],
                choose.clone(),
            ));
            out.push(RuleTemplate::new(
                "object_neg",
                cfg.w_obj_neg,
                vec![cooccur("O").negate(), near],
                choose.clone().negate(),
            ));
        }
        if cfg.use_room {
            let near = Literal::new(IS_NEAR_ROOM, &["F", "R"]);
            out.push(RuleTemplate::new(
                "room",
                cfg.w_room,
                vec![cooccur("R"), near.clone()],
                choose.clone(),
            ));
            out.push(RuleTemplate::new(
                "room_neg",
                cfg.w_room_neg,
                vec![cooccur("R").negate(), near],
                choose.clone().negate(),
            ));
        }
    }
    out.push(RuleTemplate::new(
        "short_dist",
        cfg.effective_w_dist(),
        vec![Literal::new(SHORT_DIST, &["F"])],
        choose,
    ));
    let exponent = Exponent::from_power(cfg.p).unwrap_or_default();
    for t in &mut out {
        t.exponent = exponent;
    }
    out
}

/// Build the selection program for `goal` over the current frontiers.
///
/// Context atoms are emitted for every (frontier, label) pair, with value 0
/// where the semantic map has nothing nearby; `pruning` decides whether the
/// resulting zero-body rules are kept.
#[allow(clippy::too_many_arguments)]
pub fn build_grounding_with(
    goal: &str,
    frontiers: &[Frontier],
    sem: &SemanticMap,
    nav: &NavMap,
    pose: &Pose,
    scores: &CooccurScores,
    cfg: &PolicyConfig,
    pruning: Pruning,
) -> Result<FrontierProgram, PolicyError> {
    let all_distances = frontier_distances(nav, pose, frontiers);
    let (eligible, threshold_waived) = eligible_frontiers(&all_distances, cfg.d_f);
    if eligible.is_empty() {
        return Err(PolicyError::NoFrontiers);
    }
    let chosen: Vec<Frontier> = eligible.iter().map(|&i| frontiers[i].clone()).collect();
    let distances: Vec<f64> = eligible.iter().map(|&i| all_distances[i]).collect();
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);

    let esc = cfg.mode == Mode::Esc;
    let with_objects = esc && cfg.use_object;
    let with_rooms = esc && cfg.use_room;
    let mut atoms: Vec<Atom<f64>> = Vec::new();
    if with_objects {
        for (label, &s) in &scores.objects {
            atoms.push(Atom::observed(AtomKey::new(IS_COOCCUR, [goal, label.as_str()]), s));
        }
    }
    if with_rooms {
        for (label, &s) in &scores.rooms {
            // objects and rooms share the predicate; a shared label must agree
            match scores.objects.get(label) {
                Some(&o) if with_objects && o != s => return Err(PolicyError::LabelOverlap(label.clone())),
                Some(_) if with_objects => continue,
                _ => atoms.push(Atom::observed(AtomKey::new(IS_COOCCUR, [goal, label.as_str()]), s)),
            }
        }
    }
    let mut simplex = Vec::with_capacity(chosen.len());
    for (f, &d) in chosen.iter().zip(&distances) {
        let fa = frontier_arg(f);
        if with_objects {
            let ctx = sem.context_near(f, ContextKind::Object, cfg.d_o);
            for label in scores.objects.keys() {
                let v = ctx.iter().find(|(l, _)| l == label).map_or(0.0, |(_, c)| *c);
                atoms.push(Atom::observed(AtomKey::new(IS_NEAR_OBJ, [fa.as_str(), label]), v));
            }
        }
        if with_rooms {
            let ctx = sem.context_near(f, ContextKind::Room, cfg.d_r);
            for label in scores.rooms.keys() {
                let v = ctx.iter().find(|(l, _)| l == label).map_or(0.0, |(_, c)| *c);
                atoms.push(Atom::observed(AtomKey::new(IS_NEAR_ROOM, [fa.as_str(), label]), v));
            }
        }
        let short = if d > 0.0 { (d_min / d).min(1.0) } else { 1.0 };
        atoms.push(Atom::observed(AtomKey::new(SHORT_DIST, [fa.as_str()]), short));
        let key = AtomKey::new(CHOOSE_FRONTIER, [fa.as_str()]);
        atoms.push(Atom::target(key.clone()).with_tie_break(d, f.id));
        simplex.push(key);
    }
    let grounding = Grounding::build(atoms, templates(cfg), &[simplex], pruning)?;
    Ok(FrontierProgram {
        grounding,
        frontiers: chosen,
        distances,
        threshold_waived,
    })
}

/// [`build_grounding_with`] using zero-body pruning.
pub fn build_grounding(
    goal: &str,
    frontiers: &[Frontier],
    sem: &SemanticMap,
    nav: &NavMap,
    pose: &Pose,
    scores: &CooccurScores,
    cfg: &PolicyConfig,
) -> Result<FrontierProgram, PolicyError> {
    build_grounding_with(goal, frontiers, sem, nav, pose, scores, cfg, Pruning::ZeroBody)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Index into [`FrontierProgram::frontiers`].
    pub index: usize,
    pub frontier_id: usize,
    pub energy: f64,
    pub solve_secs: f64,
}

/// Solve the program and return the chosen frontier.
pub fn select_frontier(program: &FrontierProgram, cfg: &PolicyConfig) -> Result<Selection, PolicyError> {
    let g = &program.grounding;
    let start = Instant::now();
    let (atom, energy) = match cfg.solver {
        SolverKind::OneHot => {
            let s = solve_one_hot(g)?;
            (s.chosen, s.energy)
        }
        SolverKind::Continuous => {
            let s = solve_continuous(g, SubgradientOptions::default())?;
            (round_to_vertex(g, &s.assignment)?, s.energy)
        }
    };
    let solve_secs = start.elapsed().as_secs_f64();
    let slot = g.target_slot(atom).expect("chosen atom is a target");
    let frontier = &program.frontiers[slot];
    Ok(Selection {
        index: slot,
        frontier_id: frontier.id,
        energy,
        solve_secs,
    })
}
