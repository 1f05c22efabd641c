//! MAP inference over the frontier simplex.

use std::cmp::Ordering;

use super::program::{Assignment, AtomId, Grounding};
use super::SoftLogicError;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct OneHotSolution<T> {
    pub assignment: Assignment<T>,
    pub energy: T,
    pub chosen: AtomId,
    /// Energy of every vertex, in simplex order.
    pub vertex_energies: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ContinuousSolution<T> {
    pub assignment: Assignment<T>,
    pub energy: T,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SubgradientOptions<T> {
    pub eps: T,
    pub max_iter: usize,
    /// Iterations without a best-energy improvement of at least `eps`
    /// before stopping.
    pub patience: usize,
    pub step_scale: T,
}

impl<T: Real> Default for SubgradientOptions<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(1e-4),
            max_iter: 500,
            patience: 20,
            step_scale: T::lit(0.1),
        }
    }
}

/// Relative tolerance under which two energies count as tied.
pub(crate) fn energies_tie<T: Real>(a: T, b: T) -> bool {
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= T::lit(1e-9) * scale
}

/// Order candidates by (energy, tie-break distance, tie-break id, position).
pub(crate) fn candidate_order<T: Real>(g: &Grounding<T>, a: (AtomId, T), b: (AtomId, T)) -> Ordering {
    if !energies_tie(a.1, b.1) {
        return a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal);
    }
    let ta = g.atoms()[a.0].tie_break;
    let tb = g.atoms()[b.0].tie_break;
    match (ta, tb) {
        (Some(x), Some(y)) => x
            .distance
            .partial_cmp(&y.distance)
            .unwrap_or(Ordering::Equal)
            .then(x.id.cmp(&y.id))
            .then(a.0.cmp(&b.0)),
        _ => a.0.cmp(&b.0),
    }
}

fn single_simplex<T: Real>(g: &Grounding<T>) -> Result<&[AtomId], SoftLogicError> {
    match g.constraints() {
        [] => Err(SoftLogicError::NoTargets),
        [c] if c.atoms.is_empty() => Err(SoftLogicError::NoTargets),
        [c] => Ok(&c.atoms),
        more => Err(SoftLogicError::UnsupportedConstraints(more.len())),
    }
}

/// Exhaustive search over one-hot assignments of the simplex.
pub fn solve_one_hot<T: Real>(g: &Grounding<T>) -> Result<OneHotSolution<T>, SoftLogicError> {
    let simplex = single_simplex(g)?;
    let n = g.targets().len();
    let mut y = vec![T::zero(); n];
    let mut vertex_energies = Vec::with_capacity(simplex.len());
    let mut best: Option<(AtomId, T)> = None;
    for &atom in simplex {
        let s = g.target_slot(atom).expect("simplex atoms are targets");
        y[s] = T::one();
        let e = g.hinge_energy(&y);
        y[s] = T::zero();
        vertex_energies.push(e);
        best = match best {
            Some(b) if candidate_order(g, b, (atom, e)) != Ordering::Greater => Some(b),
            _ => Some((atom, e)),
        };
    }
    let (chosen, energy) = best.expect("non-empty simplex");
    Ok(OneHotSolution {
        assignment: Assignment::one_hot(n, g.target_slot(chosen).unwrap()),
        energy,
        chosen,
        vertex_energies,
    })
}

/// Euclidean projection onto `{x >= 0, sum(x) = total}`.
pub fn project_simplex<T: Real>(v: &[T], total: T) -> Vec<T> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cum = cum + uj;
        let t = (cum - total) / T::from_usize(j + 1).unwrap();
        if uj - t > T::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

/// Projected subgradient descent from the uniform point with step
/// `step_scale / sqrt(t)`. Returns the best iterate seen.
pub fn solve_continuous<T: Real>(
    g: &Grounding<T>,
    opts: SubgradientOptions<T>,
) -> Result<ContinuousSolution<T>, SoftLogicError> {
    if !(opts.eps > T::zero()) {
        return Err(SoftLogicError::InvalidOption("eps must be positive"));
    }
    let simplex: Vec<usize> = single_simplex(g)?.iter().map(|&a| g.target_slot(a).unwrap()).collect();
    let n = g.targets().len();
    let m = T::from_usize(simplex.len()).unwrap();
    let mut y = vec![T::zero(); n];
    for &s in &simplex {
        y[s] = T::one() / m;
    }
    let mut best_y = y.clone();
    let mut best_e = g.hinge_energy(&y);
    let mut last_gain_at = 0usize;
    let mut ref_e = best_e;
    let mut grad = vec![T::zero(); n];
    let mut iterations = 0;
    for t in 1..=opts.max_iter {
        iterations = t;
        grad.iter_mut().for_each(|x| *x = T::zero());
        for h in &g.hinges {
            let l = h.linear_part(&y);
            if l > T::zero() {
                let scale = match h.exponent {
                    super::Exponent::Linear => h.weight,
                    super::Exponent::Squared => h.weight * T::lit(2.0) * l,
                };
                for &(s, c) in &h.coeffs {
                    grad[s] = grad[s] + scale * c;
                }
            }
        }
        if grad.iter().all(|&x| x == T::zero()) {
            break;
        }
        let step = opts.step_scale / T::from_usize(t).unwrap().sqrt();
        let moved: Vec<T> = simplex.iter().map(|&s| y[s] - step * grad[s]).collect();
        for (&s, v) in simplex.iter().zip(project_simplex(&moved, T::one())) {
            y[s] = v;
        }
        let e = g.hinge_energy(&y);
        if e < best_e {
            best_e = e;
            best_y.copy_from_slice(&y);
        }
        if ref_e - best_e >= opts.eps {
            ref_e = best_e;
            last_gain_at = t;
        } else if t - last_gain_at >= opts.patience {
            break;
        }
    }
    Ok(ContinuousSolution {
        assignment: Assignment(best_y),
        energy: best_e,
        iterations,
    })
}

/// Round a continuous solution to the simplex atom with the largest mass.
pub fn round_to_vertex<T: Real>(g: &Grounding<T>, assignment: &Assignment<T>) -> Result<AtomId, SoftLogicError> {
    let simplex = single_simplex(g)?;
    let mut best: Option<(AtomId, T)> = None;
    for &atom in simplex {
        // negate mass so that the shared ordering picks the maximum
        let key = -assignment.0[g.target_slot(atom).unwrap()];
        best = match best {
            Some(b) if candidate_order(g, b, (atom, key)) != Ordering::Greater => Some(b),
            _ => Some((atom, key)),
        };
    }
    Ok(best.expect("non-empty simplex").0)
}
