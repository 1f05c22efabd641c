use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::luk;
use super::SoftLogicError;
use crate::scalar::{max, Real, Truth};

pub type AtomId = usize;

/// Predicate name plus constant arguments; unique within a grounding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomKey {
    pub predicate: String,
    pub args: Vec<String>,
}

impl AtomKey {
    pub fn new<S: Into<String>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        Self {
            predicate: predicate.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for AtomKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomKind {
    Observed,
    Target,
}

/// Ordering key used by the solvers to break energy ties between targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TieBreak<T> {
    pub distance: T,
    pub id: usize,
}

#[derive(Clone, Debug)]
pub struct Atom<T> {
    pub key: AtomKey,
    pub kind: AtomKind,
    /// Fixed value for observed atoms; ignored for targets.
    pub value: T,
    pub tie_break: Option<TieBreak<T>>,
}

impl<T: Truth> Atom<T> {
    pub fn observed(key: AtomKey, value: T) -> Self {
        Self {
            key,
            kind: AtomKind::Observed,
            value,
            tie_break: None,
        }
    }

    pub fn target(key: AtomKey) -> Self {
        Self {
            key,
            kind: AtomKind::Target,
            value: T::zero(),
            tie_break: None,
        }
    }

    pub fn with_tie_break(mut self, distance: T, id: usize) -> Self {
        self.tie_break = Some(TieBreak { distance, id });
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    /// Positive literal whose arguments are all variables.
    pub fn new(predicate: &str, vars: &[&str]) -> Self {
        Self {
            predicate: predicate.to_string(),
            args: vars.iter().map(|v| Term::Var(v.to_string())).collect(),
            negated: false,
        }
    }

    pub fn with_args(predicate: &str, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.to_string(),
            args,
            negated: false,
        }
    }

    pub fn negate(mut self) -> Self {
        self.negated = !self.negated;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    #[default]
    Linear,
    Squared,
}

impl Exponent {
    pub fn from_power(p: u8) -> Option<Self> {
        match p {
            1 => Some(Self::Linear),
            2 => Some(Self::Squared),
            _ => None,
        }
    }

    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Self::Linear => v,
            Self::Squared => v * v,
        }
    }
}

/// Weighted implication `body_1 & ... & body_k -> head`.
#[derive(Clone, Debug)]
pub struct RuleTemplate<T> {
    pub name: String,
    pub weight: T,
    pub body: Vec<Literal>,
    pub head: Literal,
    pub exponent: Exponent,
}

impl<T: Real> RuleTemplate<T> {
    pub fn new(name: &str, weight: T, body: Vec<Literal>, head: Literal) -> Self {
        Self {
            name: name.to_string(),
            weight,
            body,
            head,
            exponent: Exponent::Linear,
        }
    }

    pub fn squared(mut self) -> Self {
        self.exponent = Exponent::Squared;
        self
    }

    fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.body.iter().chain(std::iter::once(&self.head))
    }
}

/// One literal bound to a concrete atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundLiteral {
    pub atom: AtomId,
    pub negated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundRule {
    pub template: usize,
    pub body: Vec<BoundLiteral>,
    pub head: BoundLiteral,
}

/// Hard constraint: the listed target atoms sum to `total`.
#[derive(Clone, Debug)]
pub struct SumConstraint<T> {
    pub atoms: Vec<AtomId>,
    pub total: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pruning {
    /// Drop bindings whose body contains an observed literal of value 0.
    #[default]
    ZeroBody,
    None,
}

/// Values for the target atoms, aligned with [`Grounding::targets`].
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T>(pub Vec<T>);

impl<T: Real> Assignment<T> {
    pub fn one_hot(len: usize, hot: usize) -> Self {
        let mut v = vec![T::zero(); len];
        v[hot] = T::one();
        Self(v)
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![T::one() / T::from_usize(len.max(1)).unwrap(); len])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }
}

/// Instantiate every template against the atom set.
///
/// A binding is valid when every literal (body and head) resolves to an
/// existing atom under a consistent variable assignment.
pub fn ground_rules<T: Real>(
    templates: &[RuleTemplate<T>],
    atoms: &[Atom<T>],
    pruning: Pruning,
) -> Result<Vec<GroundRule>, SoftLogicError> {
    let mut by_pred: HashMap<&str, Vec<AtomId>> = HashMap::new();
    for (id, a) in atoms.iter().enumerate() {
        by_pred.entry(a.key.predicate.as_str()).or_default().push(id);
    }
    let mut out = Vec::new();
    for (tidx, t) in templates.iter().enumerate() {
        if !t.weight.is_finite() || t.weight < T::zero() {
            return Err(SoftLogicError::InvalidWeight {
                template: t.name.clone(),
            });
        }
        for lit in t.literals() {
            if !by_pred.contains_key(lit.predicate.as_str()) {
                return Err(SoftLogicError::UnknownPredicate {
                    template: t.name.clone(),
                    predicate: lit.predicate.clone(),
                });
            }
        }
        let lits: Vec<&Literal> = t.literals().collect();
        let mut bound = Vec::with_capacity(lits.len());
        let mut env = BTreeMap::new();
        bind(&lits, 0, atoms, &by_pred, &mut env, &mut bound, &mut |ids| {
            let body: Vec<BoundLiteral> = t
                .body
                .iter()
                .zip(ids)
                .map(|(l, &atom)| BoundLiteral {
                    atom,
                    negated: l.negated,
                })
                .collect();
            let head = BoundLiteral {
                atom: ids[ids.len() - 1],
                negated: t.head.negated,
            };
            if pruning == Pruning::ZeroBody
                && body.iter().any(|b| {
                    let a = &atoms[b.atom];
                    a.kind == AtomKind::Observed && literal_value(a.value, b.negated) <= T::zero()
                })
            {
                return;
            }
            out.push(GroundRule {
                template: tidx,
                body,
                head,
            });
        });
    }
    Ok(out)
}

fn bind<'a, T, F>(
    lits: &[&'a Literal],
    depth: usize,
    atoms: &'a [Atom<T>],
    by_pred: &HashMap<&str, Vec<AtomId>>,
    env: &mut BTreeMap<&'a str, &'a str>,
    bound: &mut Vec<AtomId>,
    emit: &mut F,
) where
    F: FnMut(&[AtomId]),
{
    if depth == lits.len() {
        emit(bound);
        return;
    }
    let lit = lits[depth];
    let Some(cands) = by_pred.get(lit.predicate.as_str()) else {
        return;
    };
    for &id in cands {
        let key = &atoms[id].key;
        if key.args.len() != lit.args.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (term, val) in lit.args.iter().zip(&key.args) {
            match term {
                Term::Const(c) => {
                    if c != val {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match env.get(v.as_str()) {
                    Some(existing) if *existing != val.as_str() => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        env.insert(v.as_str(), val.as_str());
                        added.push(v.as_str());
                    }
                },
            }
        }
        if ok {
            bound.push(id);
            bind(lits, depth + 1, atoms, by_pred, env, bound, emit);
            bound.pop();
        }
        for v in added {
            env.remove(v);
        }
    }
}

fn literal_value<T: Truth>(v: T, negated: bool) -> T {
    if negated {
        luk::neg(v)
    } else {
        v
    }
}

/// Rule in linear form `weight * max(0, constant + sum(coeff * y_slot))^p`.
#[derive(Clone, Debug)]
pub(crate) struct LinearHinge<T> {
    pub weight: T,
    pub constant: T,
    pub coeffs: Vec<(usize, T)>,
    pub exponent: Exponent,
}

impl<T: Real> LinearHinge<T> {
    pub fn linear_part(&self, y: &[T]) -> T {
        self.coeffs.iter().fold(self.constant, |acc, &(s, c)| acc + c * y[s])
    }

    pub fn energy(&self, y: &[T]) -> T {
        let l = self.linear_part(y);
        if l <= T::zero() {
            T::zero()
        } else {
            self.weight * self.exponent.apply(l)
        }
    }
}

/// An instantiated program: atoms, ground rules and hard constraints.
#[derive(Clone, Debug)]
pub struct Grounding<T> {
    atoms: Vec<Atom<T>>,
    index: HashMap<AtomKey, AtomId>,
    templates: Vec<RuleTemplate<T>>,
    rules: Vec<GroundRule>,
    constraints: Vec<SumConstraint<T>>,
    targets: Vec<AtomId>,
    slot: Vec<Option<usize>>,
    pub(crate) hinges: Vec<LinearHinge<T>>,
}

impl<T: Real> Grounding<T> {
    /// Ground `templates` over `atoms` and attach one simplex constraint per
    /// entry of `simplices` (each a list of target atom keys summing to 1).
    pub fn build(
        atoms: Vec<Atom<T>>,
        templates: Vec<RuleTemplate<T>>,
        simplices: &[Vec<AtomKey>],
        pruning: Pruning,
    ) -> Result<Self, SoftLogicError> {
        let mut index = HashMap::with_capacity(atoms.len());
        for (id, a) in atoms.iter().enumerate() {
            if a.kind == AtomKind::Observed && !(a.value >= T::zero() && a.value <= T::one()) {
                return Err(SoftLogicError::OutOfUnitRange(format!("{} = {}", a.key, a.value)));
            }
            if index.insert(a.key.clone(), id).is_some() {
                return Err(SoftLogicError::DuplicateAtom(a.key.to_string()));
            }
        }
        let rules = ground_rules(&templates, &atoms, pruning)?;
        let mut targets = Vec::new();
        let mut slot = vec![None; atoms.len()];
        for (id, a) in atoms.iter().enumerate() {
            if a.kind == AtomKind::Target {
                slot[id] = Some(targets.len());
                targets.push(id);
            }
        }
        let mut constraints = Vec::with_capacity(simplices.len());
        let mut covered = vec![0usize; atoms.len()];
        for keys in simplices {
            let mut ids = Vec::with_capacity(keys.len());
            for k in keys {
                let id = *index.get(k).ok_or_else(|| SoftLogicError::UnknownAtom(k.to_string()))?;
                if atoms[id].kind != AtomKind::Target {
                    return Err(SoftLogicError::ObservedInConstraint(k.to_string()));
                }
                covered[id] += 1;
                ids.push(id);
            }
            constraints.push(SumConstraint {
                atoms: ids,
                total: T::one(),
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| covered[t] != 1) {
            return Err(SoftLogicError::UnconstrainedTarget(atoms[t].key.to_string()));
        }
        let mut g = Self {
            atoms,
            index,
            templates,
            rules,
            constraints,
            targets,
            slot,
            hinges: Vec::new(),
        };
        g.hinges = g.rules.iter().map(|r| g.compile(r)).collect();
        Ok(g)
    }

    fn compile(&self, rule: &GroundRule) -> LinearHinge<T> {
        // distance = max(0, sum(body literals) - (k - 1) - head literal)
        let t = &self.templates[rule.template];
        let k = T::from_usize(rule.body.len()).unwrap();
        let mut constant = T::one() - k;
        let mut coeffs: Vec<(usize, T)> = Vec::new();
        let mut add = |lit: &BoundLiteral, sign: T, constant: &mut T| {
            let a = &self.atoms[lit.atom];
            let (c0, c1) = if lit.negated {
                (T::one(), -T::one())
            } else {
                (T::zero(), T::one())
            };
            *constant = *constant + sign * c0;
            match self.slot[lit.atom] {
                Some(s) => match coeffs.iter_mut().find(|(x, _)| *x == s) {
                    Some((_, c)) => *c = *c + sign * c1,
                    None => coeffs.push((s, sign * c1)),
                },
                None => *constant = *constant + sign * c1 * a.value,
            }
        };
        for b in &rule.body {
            add(b, T::one(), &mut constant);
        }
        add(&rule.head, -T::one(), &mut constant);
        LinearHinge {
            weight: t.weight,
            constant,
            coeffs,
            exponent: t.exponent,
        }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn atom_id(&self, key: &AtomKey) -> Option<AtomId> {
        self.index.get(key).copied()
    }

    pub fn templates(&self) -> &[RuleTemplate<T>] {
        &self.templates
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    pub fn constraints(&self) -> &[SumConstraint<T>] {
        &self.constraints
    }

    /// Target atom ids in assignment order.
    pub fn targets(&self) -> &[AtomId] {
        &self.targets
    }

    pub fn target_slot(&self, atom: AtomId) -> Option<usize> {
        self.slot[atom]
    }

    fn atom_value(&self, id: AtomId, assignment: &Assignment<T>) -> Result<T, SoftLogicError> {
        let a = &self.atoms[id];
        match a.kind {
            AtomKind::Observed => Ok(a.value),
            AtomKind::Target => {
                let s = self.slot[id].expect("target slot");
                assignment
                    .0
                    .get(s)
                    .copied()
                    .ok_or_else(|| SoftLogicError::Unbound(a.key.to_string()))
            }
        }
    }

    /// Distance to satisfaction of one ground rule, evaluated with the
    /// Łukasiewicz connectives: `[1 - (body -> head)]^p`.
    pub fn rule_distance(&self, rule: &GroundRule, assignment: &Assignment<T>) -> Result<T, SoftLogicError> {
        if assignment.0.len() != self.targets.len() {
            return Err(SoftLogicError::AssignmentLength {
                expected: self.targets.len(),
                got: assignment.0.len(),
            });
        }
        let mut body = T::one();
        for b in &rule.body {
            let v = self.atom_value(b.atom, assignment)?;
            body = luk::and(body, literal_value(v, b.negated));
        }
        let h = self.atom_value(rule.head.atom, assignment)?;
        let truth = luk::implies(body, literal_value(h, rule.head.negated));
        let d = max(T::zero(), T::one() - truth);
        Ok(self.templates[rule.template].exponent.apply(d))
    }

    /// Weighted sum of rule distances. Fails when the assignment leaves the
    /// feasible set (values outside `[0, 1]` or a violated sum constraint).
    pub fn total_energy(&self, assignment: &Assignment<T>) -> Result<T, SoftLogicError> {
        self.check_feasible(assignment)?;
        let mut e = T::zero();
        for r in &self.rules {
            e = e + self.templates[r.template].weight * self.rule_distance(r, assignment)?;
        }
        Ok(e)
    }

    /// Energy through the compiled linear hinges; no feasibility check.
    pub(crate) fn hinge_energy(&self, y: &[T]) -> T {
        self.hinges.iter().fold(T::zero(), |acc, h| acc + h.energy(y))
    }

    pub fn check_feasible(&self, assignment: &Assignment<T>) -> Result<(), SoftLogicError> {
        if assignment.0.len() != self.targets.len() {
            return Err(SoftLogicError::AssignmentLength {
                expected: self.targets.len(),
                got: assignment.0.len(),
            });
        }
        let tol = T::lit(1e-6);
        for (i, &v) in assignment.0.iter().enumerate() {
            if !(v >= -tol && v <= T::one() + tol) {
                return Err(SoftLogicError::Infeasible(format!(
                    "{} = {v}",
                    self.atoms[self.targets[i]].key
                )));
            }
        }
        for c in &self.constraints {
            let s = c
                .atoms
                .iter()
                .fold(T::zero(), |acc, &a| acc + assignment.0[self.slot[a].unwrap()]);
            if (s - c.total).abs() > tol {
                return Err(SoftLogicError::Infeasible(format!(
                    "sum constraint over {} atoms is {s}, expected {}",
                    c.atoms.len(),
                    c.total
                )));
            }
        }
        Ok(())
    }

    /// JSON-friendly dump of atoms, rules and per-rule distances.
    pub fn dump(&self, assignment: &Assignment<T>) -> GroundingDump {
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(id, a)| AtomDump {
                key: a.key.to_string(),
                kind: a.kind,
                value: self
                    .atom_value(id, assignment)
                    .map(Real::to_f64_lossy)
                    .unwrap_or(f64::NAN),
            })
            .collect();
        let rules = self
            .rules
            .iter()
            .map(|r| {
                let t = &self.templates[r.template];
                RuleDump {
                    template: t.name.clone(),
                    weight: t.weight.to_f64_lossy(),
                    body: r
                        .body
                        .iter()
                        .map(|b| lit_string(&self.atoms[b.atom].key, b.negated))
                        .collect(),
                    head: lit_string(&self.atoms[r.head.atom].key, r.head.negated),
                    distance: self
                        .rule_distance(r, assignment)
                        .map(Real::to_f64_lossy)
                        .unwrap_or(f64::NAN),
                }
            })
            .collect();
        GroundingDump { atoms, rules }
    }
}

fn lit_string(key: &AtomKey, negated: bool) -> String {
    if negated {
        format!("!{key}")
    } else {
        key.to_string()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomDump {
    pub key: String,
    pub kind: AtomKind,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuleDump {
    pub template: String,
    pub weight: f64,
    pub body: Vec<String>,
    pub head: String,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundingDump {
    pub atoms: Vec<AtomDump>,
    pub rules: Vec<RuleDump>,
}
