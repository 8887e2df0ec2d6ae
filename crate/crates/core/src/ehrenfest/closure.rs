use std::collections::{HashMap, VecDeque};

use super::hamiltonian::Hamiltonian;
use super::key::MomentKey;
use super::system::{ForcingEntry, LinearEntry, OdeSystem, Rhs};
use crate::opalg::{Coefficient, OperatorExpr, OperatorSymbol};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClosureError {
    #[error("no seed observables given")]
    NoSeeds,
    #[error("the identity cannot be a seed; its expectation is constant")]
    IdentitySeed,
    #[error(
        "moment hierarchy does not close: <{monomial}> has degree {degree}, beyond the bound {bound} \
         for this Hamiltonian; pass a maximum order to truncate"
    )]
    HierarchyDivergence { monomial: String, degree: usize, bound: usize },
}

/// `−i[A, H]`, the Heisenberg derivative of a time-independent observable (ħ = 1).
pub fn heisenberg_derivative(observable: &OperatorExpr, h: &OperatorExpr) -> OperatorExpr {
    observable.commutator(h).scale(&-Coefficient::i())
}

/// Degree headroom granted to non-quadratic Hamiltonians before the
/// hierarchy is declared divergent: two degree-raising commutator rounds.
fn divergence_bound(seed_degree: usize, h_degree: usize) -> Option<usize> {
    (h_degree > 2).then(|| seed_degree + 2 * (h_degree - 2))
}

struct Registry {
    variables: Vec<MomentKey>,
    index: HashMap<MomentKey, usize>,
    queue: VecDeque<usize>,
}

impl Registry {
    fn intern(&mut self, key: MomentKey) -> usize {
        if let Some(&k) = self.index.get(&key) {
            return k;
        }
        let k = self.variables.len();
        self.index.insert(key.clone(), k);
        self.variables.push(key);
        self.queue.push_back(k);
        k
    }
}

/// Applies Ehrenfest's theorem recursively from `seeds` until the tracked
/// set closes.
///
/// Variables are indexed breadth-first in discovery order, seeds first. With
/// `max_order`, monomials above that degree are replaced by zero and the
/// system is flagged truncated. Without it, a quadratic Hamiltonian always
/// closes; for higher-degree Hamiltonians a monomial whose degree exceeds
/// the seed degree by more than two commutator rounds aborts with
/// [`ClosureError::HierarchyDivergence`].
pub fn derive_closure(
    h: &Hamiltonian,
    seeds: &[MomentKey],
    max_order: Option<usize>,
) -> Result<OdeSystem, ClosureError> {
    if seeds.is_empty() {
        return Err(ClosureError::NoSeeds);
    }
    if seeds.iter().any(MomentKey::is_identity) {
        return Err(ClosureError::IdentitySeed);
    }
    let static_part = h.operator.canonicalize();
    let drives: Vec<_> = h.drives.iter().map(|d| (d.operator.canonicalize(), d.time)).collect();
    let seed_degree = seeds.iter().map(MomentKey::degree).max().unwrap_or(0);
    let bound = match max_order {
        Some(_) => None,
        None => divergence_bound(seed_degree, h.degree()),
    };

    let mut reg = Registry { variables: Vec::new(), index: HashMap::new(), queue: VecDeque::new() };
    for s in seeds {
        reg.intern(s.clone());
    }
    let mut rhs: Vec<Rhs> = Vec::new();
    let mut truncated = false;

    // Returns the variable slot for a monomial, `None` when dropped by truncation.
    let mut classify = |reg: &mut Registry, factors: &[OperatorSymbol]| -> Result<Option<usize>, ClosureError> {
        let degree = factors.len();
        if let Some(order) = max_order {
            if degree > order {
                truncated = true;
                return Ok(None);
            }
        }
        let key = MomentKey::new_unchecked(factors.to_vec());
        if let Some(bound) = bound {
            if degree > bound {
                return Err(ClosureError::HierarchyDivergence { monomial: key.to_string(), degree, bound });
            }
        }
        Ok(Some(reg.intern(key)))
    };

    while let Some(k) = reg.queue.pop_front() {
        let observable = reg.variables[k].to_expr();
        let mut row = Rhs::default();
        for t in heisenberg_derivative(&observable, &static_part).terms() {
            let coeff = t.coeff.to_c64();
            if t.factors.is_empty() {
                row.constant += coeff;
            } else if let Some(var) = classify(&mut reg, &t.factors)? {
                row.linear.push(LinearEntry { var, coeff });
            }
        }
        for (op, time) in &drives {
            for t in heisenberg_derivative(&observable, op).terms() {
                let coeff = t.coeff.to_c64();
                let var = if t.factors.is_empty() {
                    None
                } else {
                    match classify(&mut reg, &t.factors)? {
                        Some(v) => Some(v),
                        None => continue,
                    }
                };
                row.driven.push(ForcingEntry { var, coeff, time: *time });
            }
        }
        if rhs.len() <= k {
            rhs.resize(k + 1, Rhs::default());
        }
        rhs[k] = row;
    }
    rhs.resize(reg.variables.len(), Rhs::default());
    Ok(OdeSystem::new(reg.variables, rhs, truncated, max_order))
}

/// `⟨a_i⟩` and `⟨a_i†⟩` for every mode, in mode order.
pub fn first_moment_seeds(mode_count: usize) -> Vec<MomentKey> {
    (0..mode_count as u32).flat_map(|m| [MomentKey::annihilate(m), MomentKey::create(m)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehrenfest::{build_hamiltonian, HamiltonianSpec, TimeFunction};
    use crate::opalg::parse_expr;
    use num_complex::Complex64;

    fn h_of(s: &str) -> Hamiltonian {
        Hamiltonian::from(parse_expr(s).unwrap())
    }

    #[test]
    fn free_oscillator_rotates() {
        let h = build_hamiltonian(&HamiltonianSpec::uncoupled(vec![2.0])).unwrap();
        let sys = derive_closure(&h, &first_moment_seeds(1), None).unwrap();
        assert_eq!(sys.len(), 2);
        assert!(!sys.truncated());
        let a = &sys.rhs()[0];
        assert_eq!(a.linear.len(), 1);
        assert_eq!(a.linear[0].var, 0);
        assert_eq!(a.linear[0].coeff, Complex64::new(0.0, -2.0));
        assert_eq!(sys.to_string(), "d<a[0]>/dt = -2i*<a[0]>\nd<ad[0]>/dt = 2i*<ad[0]>\n");
    }

    #[test]
    fn coupled_pair_in_quadratures() {
        let spec = HamiltonianSpec::uncoupled(vec![1.0, 1.5]).with_coupling(0, 1, 0.25);
        let h = build_hamiltonian(&spec).unwrap();
        let sys = derive_closure(&h, &first_moment_seeds(2), None).unwrap();
        assert_eq!(sys.len(), 4);
        let listing = sys.quadrature_listing().unwrap();
        let lines: Vec<&str> = listing.lines().collect();
        assert_eq!(
            lines,
            [
                "d<q[0]>/dt = <p[0]>",
                "d<p[0]>/dt = -<q[0]> - 0.25*<q[1]>",
                "d<q[1]>/dt = 1.5*<p[1]>",
                "d<p[1]>/dt = -0.25*<q[0]> - 1.5*<q[1]>",
            ]
        );
    }

    #[test]
    fn seeds_come_first_and_unseeded_partners_are_discovered() {
        let h = build_hamiltonian(&HamiltonianSpec::uncoupled(vec![1.0, 1.0]).with_coupling(0, 1, 0.1)).unwrap();
        let sys = derive_closure(&h, &[MomentKey::annihilate(0)], None).unwrap();
        assert_eq!(sys.variables()[0], MomentKey::annihilate(0));
        assert_eq!(sys.len(), 4);
    }

    #[test]
    fn cubic_hamiltonian_truncates() {
        let h = h_of("n[0] + (1/10)*q[0]^3");
        let sys = derive_closure(&h, &first_moment_seeds(1), Some(3)).unwrap();
        assert!(sys.truncated());
        assert!(sys.variables().iter().all(|k| k.degree() <= 3));
        assert_eq!(sys.truncation_order(), Some(3));
    }

    #[test]
    fn quartic_hamiltonian_diverges_without_order() {
        let h = h_of("n[0] + q[0]^4");
        match derive_closure(&h, &first_moment_seeds(1), None) {
            Err(ClosureError::HierarchyDivergence { degree, bound, .. }) => assert!(degree > bound),
            other => panic!("expected divergence, got {other:?}"),
        }
        let sys = derive_closure(&h, &first_moment_seeds(1), Some(4)).unwrap();
        assert!(sys.truncated());
    }

    #[test]
    fn rejects_bad_seeds() {
        let h = h_of("n[0]");
        assert_eq!(derive_closure(&h, &[], None).unwrap_err(), ClosureError::NoSeeds);
        assert_eq!(derive_closure(&h, &[MomentKey::identity()], None).unwrap_err(), ClosureError::IdentitySeed);
    }

    #[test]
    fn linear_drive_forces_first_moments() {
        let spec = HamiltonianSpec::uncoupled(vec![1.0])
            .with_term(parse_expr("q[0]").unwrap(), Some(TimeFunction::Cos { frequency: 1.0, phase: 0.0 }));
        let h = build_hamiltonian(&spec).unwrap();
        let sys = derive_closure(&h, &first_moment_seeds(1), None).unwrap();
        assert!(!sys.is_autonomous());
        assert_eq!(sys.len(), 2);
        // -i[a, q/√2·... ] gives a pure forcing term on each variable
        assert!(sys.rhs().iter().all(|r| r.driven.len() == 1 && r.driven[0].var.is_none()));
        let listing = sys.quadrature_listing().unwrap();
        assert!(listing.contains("d<p[0]>/dt = -<q[0]> - cos(1*t)"), "{listing}");
    }

    #[test]
    fn second_moments_close_for_quadratic_hamiltonian() {
        let h = build_hamiltonian(&HamiltonianSpec::uncoupled(vec![1.0, 2.0]).with_coupling(0, 1, 0.3)).unwrap();
        let seeds: Vec<MomentKey> = vec!["ad[0]*a[0]".parse().unwrap()];
        let sys = derive_closure(&h, &seeds, None).unwrap();
        assert!(!sys.truncated());
        assert!(sys.variables().iter().all(|k| k.degree() == 2));
        // all ten quadratic monomials in two modes: a_i a_j, a_i† a_j, a_i† a_j†
        assert_eq!(sys.len(), 10);
    }
}
