//! A small probabilistic-soft-logic engine.
//!
//! Rules are weighted implications over atoms valued in `[0, 1]`. Each ground
//! rule contributes a hinge-loss potential `w * max(0, body - head)^p` where
//! the body is the Łukasiewicz conjunction of its literals. MAP inference
//! minimises the summed potentials subject to simplex constraints over the
//! target atoms; no partition function is computed.

pub mod luk;
mod program;
mod solver;

use thiserror::Error;

pub use luk::Connective;
pub use program::{
    ground_rules, Assignment, Atom, AtomDump, AtomId, AtomKey, AtomKind, BoundLiteral, Exponent, GroundRule, Grounding,
    GroundingDump, Literal, Pruning, RuleDump, RuleTemplate, SumConstraint, Term, TieBreak,
};
pub use solver::{
    project_simplex, round_to_vertex, solve_continuous, solve_one_hot, ContinuousSolution, OneHotSolution,
    SubgradientOptions,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoftLogicError {
    #[error("value {0} outside [0, 1]")]
    OutOfUnitRange(String),
    #[error("connective {0:?} needs a second operand")]
    MissingOperand(Connective),
    #[error("template `{template}` references unknown predicate `{predicate}`")]
    UnknownPredicate { template: String, predicate: String },
    #[error("template `{template}` has a negative or non-finite weight")]
    InvalidWeight { template: String },
    #[error("duplicate atom {0}")]
    DuplicateAtom(String),
    #[error("unknown atom {0}")]
    UnknownAtom(String),
    #[error("observed atom {0} cannot appear in a sum constraint")]
    ObservedInConstraint(String),
    #[error("target atom {0} must appear in exactly one sum constraint")]
    UnconstrainedTarget(String),
    #[error("atom {0} has no value in the assignment")]
    Unbound(String),
    #[error("assignment has {got} values, grounding has {expected} targets")]
    AssignmentLength { expected: usize, got: usize },
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("grounding has no target atoms")]
    NoTargets,
    #[error("solvers support a single simplex constraint, found {0}")]
    UnsupportedConstraints(usize),
    #[error("invalid solver option: {0}")]
    InvalidOption(&'static str),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj_rule(w: f64) -> RuleTemplate<f64> {
        RuleTemplate::new(
            "object+",
            w,
            vec![
                Literal::new("IsCooccur", &["G", "O"]),
                Literal::new("IsNearObj", &["F", "O"]),
            ],
            Literal::new("ChooseFrontier", &["F"]),
        )
    }

    fn neg_obj_rule(w: f64) -> RuleTemplate<f64> {
        RuleTemplate::new(
            "object-",
            w,
            vec![
                Literal::new("IsCooccur", &["G", "O"]).negate(),
                Literal::new("IsNearObj", &["F", "O"]),
            ],
            Literal::new("ChooseFrontier", &["F"]).negate(),
        )
    }

    fn single(x1: f64, x2: f64, templates: Vec<RuleTemplate<f64>>) -> Grounding<f64> {
        let atoms = vec![
            Atom::observed(AtomKey::new("IsCooccur", ["tv", "couch"]), x1),
            Atom::observed(AtomKey::new("IsNearObj", ["f0", "couch"]), x2),
            Atom::target(AtomKey::new("ChooseFrontier", ["f0"])),
        ];
        Grounding::build(
            atoms,
            templates,
            &[vec![AtomKey::new("ChooseFrontier", ["f0"])]],
            Pruning::None,
        )
        .unwrap()
    }

    #[test]
    fn worked_example_distance() {
        let g = single(0.8, 0.8, vec![obj_rule(1.0)]);
        let r = &g.rules()[0];
        let d0 = g.rule_distance(r, &Assignment(vec![0.0])).unwrap();
        assert!((d0 - 0.6).abs() < 1e-9);
        for y in [0.6, 0.7, 1.0] {
            assert!(g.rule_distance(r, &Assignment(vec![y])).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn negative_rule_killed_by_full_cooccurrence() {
        let g = single(1.0, 0.7, vec![neg_obj_rule(1.0)]);
        for y in [0.0, 0.5, 1.0] {
            assert_eq!(g.rule_distance(&g.rules()[0], &Assignment(vec![y])).unwrap(), 0.0);
        }
    }

    #[test]
    fn energy_with_no_rules_is_zero() {
        let g = single(0.8, 0.8, vec![]);
        assert_eq!(g.total_energy(&Assignment(vec![1.0])).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_assignment_flagged() {
        let g = single(0.8, 0.8, vec![obj_rule(1.0)]);
        assert!(matches!(
            g.total_energy(&Assignment(vec![0.0])),
            Err(SoftLogicError::Infeasible(_))
        ));
        assert!(matches!(
            g.total_energy(&Assignment(vec![])),
            Err(SoftLogicError::AssignmentLength { .. })
        ));
    }

    #[test]
    fn unknown_predicate_rejected() {
        let t = RuleTemplate::new(
            "bad",
            1.0,
            vec![Literal::new("Missing", &["F"])],
            Literal::new("ChooseFrontier", &["F"]),
        );
        let atoms = vec![Atom::target(AtomKey::new("ChooseFrontier", ["f0"]))];
        let err = ground_rules(&[t], &atoms, Pruning::None).unwrap_err();
        assert!(matches!(err, SoftLogicError::UnknownPredicate { ref predicate, .. } if predicate == "Missing"));
    }

    #[test]
    fn combinatorial_counts() {
        let mut atoms = vec![];
        for o in ["a", "b", "c"] {
            atoms.push(Atom::observed(AtomKey::new("IsCooccur", ["tv", o]), 0.5));
        }
        for f in ["f0", "f1"] {
            for o in ["a", "b", "c"] {
                atoms.push(Atom::observed(AtomKey::new("IsNearObj", [f, o]), 0.7));
            }
            atoms.push(Atom::observed(AtomKey::new("ShortDist", [f]), 0.7));
            atoms.push(Atom::target(AtomKey::new("ChooseFrontier", [f])));
        }
        let dist = RuleTemplate::new(
            "dist",
            1.0,
            vec![Literal::new("ShortDist", &["F"])],
            Literal::new("ChooseFrontier", &["F"]),
        );
        assert_eq!(ground_rules(&[obj_rule(1.0)], &atoms, Pruning::None).unwrap().len(), 6);
        assert_eq!(ground_rules(&[dist], &atoms, Pruning::None).unwrap().len(), 2);
    }

    #[test]
    fn constant_terms_restrict_bindings() {
        let atoms = vec![
            Atom::observed(AtomKey::new("IsCooccur", ["tv", "couch"]), 0.9),
            Atom::observed(AtomKey::new("IsCooccur", ["bed", "couch"]), 0.2),
            Atom::observed(AtomKey::new("IsNearObj", ["f0", "couch"]), 0.9),
            Atom::target(AtomKey::new("ChooseFrontier", ["f0"])),
        ];
        let t = RuleTemplate::new(
            "tv only",
            1.0,
            vec![
                Literal::with_args("IsCooccur", vec![Term::Const("tv".into()), Term::Var("O".into())]),
                Literal::new("IsNearObj", &["F", "O"]),
            ],
            Literal::new("ChooseFrontier", &["F"]),
        );
        assert_eq!(ground_rules(&[t], &atoms, Pruning::None).unwrap().len(), 1);
    }

    #[test]
    fn one_hot_single_frontier() {
        let g = single(0.3, 0.9, vec![obj_rule(1.0), neg_obj_rule(1.0)]);
        let s = solve_one_hot(&g).unwrap();
        assert_eq!(s.assignment.values(), &[1.0]);
        assert_eq!(g.atoms()[s.chosen].key, AtomKey::new("ChooseFrontier", ["f0"]));
    }

    #[test]
    fn no_targets_is_an_error() {
        let atoms = vec![Atom::observed(AtomKey::new("ShortDist", ["f0"]), 1.0)];
        let g = Grounding::<f64>::build(atoms, vec![], &[], Pruning::None).unwrap();
        assert_eq!(solve_one_hot(&g).unwrap_err(), SoftLogicError::NoTargets);
    }

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.5, 0.5], 1.0);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, -1.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.4f64, 0.4, 0.4], 1.0);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn squared_exponent() {
        let g = single(0.8, 0.8, vec![obj_rule(1.0).squared()]);
        let d = g.rule_distance(&g.rules()[0], &Assignment(vec![0.0])).unwrap();
        assert!((d - 0.36).abs() < 1e-12);
    }
}
