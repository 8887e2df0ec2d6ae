use num_complex::Complex64;

use crate::opalg::OperatorExpr;

/// Nested commutators `[A, [H,A], [H,[H,A]], ...]` up to `order` nestings
/// (`order + 1` entries), all canonical.
pub fn bch_series(observable: &OperatorExpr, h: &OperatorExpr, order: usize) -> Vec<OperatorExpr> {
    let mut out = Vec::with_capacity(order + 1);
    let mut current = observable.canonicalize();
    let h = h.canonicalize();
    for _ in 0..order {
        let next = h.commutator(&current);
        out.push(current);
        current = next;
    }
    out.push(current);
    out
}

/// Truncated Heisenberg-picture expansion `⟨A⟩(t) = Σ_k (it)^k / k! ⟨C_k⟩₀`
/// from initial expectations of the nested commutators.
pub fn evaluate_series(initial: &[Complex64], t: f64) -> Complex64 {
    let it = Complex64::new(0.0, t);
    let mut weight = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in initial.iter().enumerate() {
        if k > 0 {
            weight *= it / k as f64;
        }
        acc += weight * c;
    }
    acc
}
