//! Brute-force reference: state vectors in a truncated Fock space.
//!
//! Operators act factor by factor through truncated matrices of `a`, `a†`,
//! `q`, `p` and `n`, so the oracle never relies on the symbolic
//! canonicalization it is used to check. Initial states are built directly
//! from their defining formulas.

use num_complex::Complex64;

use crate::dynamics::{solve, IntegrateError, IntegratorOptions, OdeRhs, TimeGrid};
use crate::ehrenfest::{Hamiltonian, HamiltonianError, HamiltonianSpec, TimeFunction};
use crate::opalg::{OperatorExpr, OperatorSymbol, SymbolKind};
use crate::states::{InitialStateSpec, StateError};

pub const MAX_MODES: usize = 4;
pub const MAX_DIM: usize = 1 << 16;
/// Levels at the top of each mode excluded from fidelity comparisons.
pub const EDGE_MARGIN: usize = 4;
pub const NORM_TOL: f64 = 1e-6;
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle supports at most {MAX_MODES} modes, got {0}")]
    TooManyModes(usize),
    #[error("Fock space of dimension {0} exceeds the oracle limit {MAX_DIM}")]
    TooLarge(usize),
    #[error("need at least {min} Fock levels per mode, got {0}", min = EDGE_MARGIN + 1)]
    TooFewLevels(usize),
    #[error("operator references mode {mode}, but the space has {modes} modes")]
    ModeOutOfRange { mode: u32, modes: usize },
    #[error("operator degree {degree} exceeds the truncation guard {guard} for {levels} levels")]
    TruncationGuard { degree: usize, guard: usize, levels: usize },
    #[error("initial state has amplitude on level {level} of mode {mode}, beyond the truncation")]
    LevelOutOfRange { mode: usize, level: usize },
    #[error("state covers {state} modes, the space has {space}")]
    ModeCountMismatch { state: usize, space: usize },
    #[error("Hamiltonian matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("norm drifted to {norm} at t = {t}; increase the truncation")]
    NormDrift { t: f64, norm: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// `modes` oscillators, each truncated to levels `0..levels`. Basis index has mode 0 most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
    levels: usize,
}

impl FockSpace {
    pub fn new(modes: usize, levels: usize) -> Result<Self, OracleError> {
        if modes > MAX_MODES {
            return Err(OracleError::TooManyModes(modes));
        }
        if levels <= EDGE_MARGIN {
            return Err(OracleError::TooFewLevels(levels));
        }
        let dim = levels.checked_pow(modes as u32).unwrap_or(usize::MAX);
        if dim > MAX_DIM {
            return Err(OracleError::TooLarge(dim));
        }
        Ok(Self { modes, levels })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(self.modes as u32)
    }

    fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.modes - 1 - mode) as u32)
    }

    pub fn level(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels
    }

    pub fn index(&self, levels: &[usize]) -> usize {
        levels.iter().fold(0, |acc, &l| acc * self.levels + l)
    }

    /// True when every mode sits below level `levels − margin`.
    pub fn away_from_edge(&self, index: usize, margin: usize) -> bool {
        (0..self.modes).all(|m| self.level(index, m) + margin < self.levels)
    }

    /// Largest operator degree accepted for expectation values.
    pub fn degree_guard(&self) -> usize {
        self.levels - EDGE_MARGIN
    }

    fn check_modes(&self, expr: &OperatorExpr) -> Result<(), OracleError> {
        match expr.modes().last() {
            Some(&m) if m as usize >= self.modes => Err(OracleError::ModeOutOfRange { mode: m, modes: self.modes }),
            _ => Ok(()),
        }
    }
}

/// A sparse vector: `(basis index, amplitude)` pairs, possibly repeated.
pub type SparseKet = Vec<(usize, Complex64)>;

/// One truncated factor applied to a basis ket.
fn apply_symbol(space: &FockSpace, s: OperatorSymbol, index: usize, c: Complex64, out: &mut SparseKet) {
    let m = s.mode as usize;
    let stride = space.stride(m);
    let l = space.level(index, m);
    let top = space.levels - 1;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let down = |out: &mut SparseKet, w: Complex64| {
        if l > 0 {
            out.push((index - stride, w * (l as f64).sqrt()));
        }
    };
    let up = |out: &mut SparseKet, w: Complex64| {
        if l < top {
            out.push((index + stride, w * ((l + 1) as f64).sqrt()));
        }
    };
    match s.kind {
        SymbolKind::Annihilate => down(out, c),
        SymbolKind::Create => up(out, c),
        SymbolKind::Number => {
            if l > 0 {
                out.push((index, c * l as f64));
            }
        }
        SymbolKind::Position => {
            down(out, c * r);
            up(out, c * r);
        }
        SymbolKind::Momentum => {
            // p = -i(a - a†)/√2
            down(out, c * Complex64::new(0.0, -r));
            up(out, c * Complex64::new(0.0, r));
        }
        SymbolKind::Identity => out.push((index, c)),
    }
}

/// `expr |basis ket⟩`, factors applied right to left.
pub fn apply_to_basis(space: &FockSpace, expr: &OperatorExpr, index: usize) -> SparseKet {
    let mut out = SparseKet::new();
    for t in expr.terms() {
        let mut ket: SparseKet = vec![(index, t.coeff.to_c64())];
        for &s in t.factors.iter().rev() {
            let mut next = SparseKet::with_capacity(ket.len() * 2);
            for &(j, c) in &ket {
                apply_symbol(space, s, j, c, &mut next);
            }
            ket = next;
            if ket.is_empty() {
                break;
            }
        }
        out.extend(ket);
    }
    merge(out)
}

fn merge(mut ket: SparseKet) -> SparseKet {
    ket.sort_by_key(|&(j, _)| j);
    let mut out: SparseKet = Vec::with_capacity(ket.len());
    for (j, c) in ket {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += c,
            _ => out.push((j, c)),
        }
    }
    out.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
    out
}

/// Truncated operator as coordinate triplets `(row, column, value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn from_expr(space: &FockSpace, expr: &OperatorExpr) -> Result<Self, OracleError> {
        space.check_modes(expr)?;
        let mut entries = Vec::new();
        for col in 0..space.dim() {
            entries.extend(apply_to_basis(space, expr, col).into_iter().map(|(row, v)| (row, col, v)));
        }
        Ok(Self { dim: space.dim(), entries })
    }

    /// `Σ ω_i (n_i + ½) + Σ_{i<j} γ_ij q_i q_j`, built from the spec without symbolic rewriting.
    pub fn from_spec(space: &FockSpace, spec: &HamiltonianSpec) -> Result<Self, OracleError> {
        let map = spec.coupling_map()?;
        if spec.mode_count > space.modes {
            return Err(OracleError::ModeCountMismatch { state: spec.mode_count, space: space.modes });
        }
        let mut entries = Vec::new();
        for col in 0..space.dim() {
            let diag: f64 =
                spec.frequencies.iter().enumerate().map(|(m, w)| w * (space.level(col, m) as f64 + 0.5)).sum();
            entries.push((col, col, Complex64::new(diag, 0.0)));
            for (&(i, j), &g) in &map {
                let mut once = SparseKet::new();
                apply_symbol(space, OperatorSymbol::position(j as u32), col, Complex64::new(g, 0.0), &mut once);
                let mut twice = SparseKet::new();
                for (k, c) in once {
                    apply_symbol(space, OperatorSymbol::position(i as u32), k, c, &mut twice);
                }
                entries.extend(twice.into_iter().map(|(row, v)| (row, col, v)));
            }
        }
        Ok(Self { dim: space.dim(), entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64], scale: Complex64) {
        for &(r, c, v) in &self.entries {
            out[r] += scale * v * x[c];
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut out, Complex64::new(1.0, 0.0));
        out
    }

    /// Largest `|M_ij − conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut map = std::collections::HashMap::new();
        for &(r, c, v) in &self.entries {
            *map.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        map.iter()
            .map(|(&(r, c), v)| {
                let w = map.get(&(c, r)).copied().unwrap_or_default();
                (v - w.conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// A normalized-on-demand amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    space: FockSpace,
    amplitudes: Vec<Complex64>,
}

/// `Σ_k ⟨k|α⟩ |k⟩` for `k < levels`.
fn coherent_vector(alpha: Complex64, levels: usize) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(levels);
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for k in 0..levels {
        if k > 0 {
            amp *= alpha / (k as f64).sqrt();
        }
        v.push(amp);
    }
    v
}

fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

impl DenseState {
    pub fn new(space: FockSpace, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(amplitudes.len(), space.dim());
        Self { space, amplitudes }
    }

    /// Builds the state directly from its definition.
    pub fn from_spec(spec: &InitialStateSpec, levels: usize) -> Result<Self, OracleError> {
        spec.validate()?;
        let space = FockSpace::new(spec.mode_count(), levels)?;
        let d = levels;
        let fock = |mode: usize, amps: &[Complex64]| -> Result<Vec<Complex64>, OracleError> {
            if let Some(level) = amps.iter().skip(d).position(|c| c.norm_sqr() > 0.0) {
                return Err(OracleError::LevelOutOfRange { mode, level: level + d });
            }
            let mut v = amps.to_vec();
            v.resize(d, Complex64::new(0.0, 0.0));
            Ok(v)
        };
        let amplitudes = match spec {
            InitialStateSpec::ProductCoherent { alphas } => {
                alphas.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, &a| kron(&acc, &coherent_vector(a, d)))
            }
            InitialStateSpec::FockSuperpositionProduct { amplitudes } => {
                let mut acc = vec![Complex64::new(1.0, 0.0)];
                for (m, amps) in amplitudes.iter().enumerate() {
                    acc = kron(&acc, &fock(m, amps)?);
                }
                acc
            }
            &InitialStateSpec::EntangledPairs { xi, zeta, delta, bath_modes } => {
                let mut psi = vec![Complex64::new(0.0, 0.0); space.dim()];
                let r = std::f64::consts::FRAC_1_SQRT_2;
                let n1 = 1.0 / (2.0 * (1.0 + xi * xi)).sqrt();
                let n2 = 1.0 / (2.0 * (1.0 + zeta * zeta)).sqrt();
                // amplitude of |x y⟩ in each pair factor
                let pair1 = |x: usize, y: usize| match (x, y) {
                    (1, 1) | (0, 0) => n1,
                    (0, 1) | (1, 0) => xi * n1,
                    _ => 0.0,
                };
                let pair2 = |x: usize, y: usize| match (x, y) {
                    (1, 1) => n2,
                    (0, 0) => -n2,
                    (1, 0) => zeta * n2,
                    (0, 1) => -zeta * n2,
                    _ => 0.0,
                };
                let norm = 1.0 / (1.0 + delta * delta).sqrt();
                for (idx, amp) in psi.iter_mut().enumerate() {
                    let lv: Vec<usize> = (0..space.modes).map(|m| space.level(idx, m)).collect();
                    if lv.iter().any(|&l| l > 1) {
                        continue;
                    }
                    let (s1, s2) = if lv[0] == 1 { (r, r) } else { (r, -r) };
                    let mut b1 = s1;
                    let mut b2 = s2;
                    for k in 0..bath_modes / 2 {
                        b1 *= pair1(lv[2 * k + 1], lv[2 * k + 2]);
                        b2 *= pair2(lv[2 * k + 1], lv[2 * k + 2]);
                    }
                    *amp = Complex64::new(norm * (b1 + delta * b2), 0.0);
                }
                psi
            }
        };
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability on basis states with some mode in the top `margin` levels.
    pub fn edge_weight(&self, margin: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.space.away_from_edge(*k, margin))
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// `expr |ψ⟩`.
    pub fn apply(&self, expr: &OperatorExpr) -> Result<Vec<Complex64>, OracleError> {
        self.space.check_modes(expr)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (k, &c) in self.amplitudes.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, v) in apply_to_basis(&self.space, expr, k) {
                out[j] += v * c;
            }
        }
        Ok(out)
    }
}

/// `⟨ψ|expr|ψ⟩ / ⟨ψ|ψ⟩`, applying each factor as a truncated matrix.
pub fn oracle_expectation(state: &DenseState, expr: &OperatorExpr) -> Result<Complex64, OracleError> {
    let guard = state.space.degree_guard();
    if expr.degree() > guard {
        return Err(OracleError::TruncationGuard { degree: expr.degree(), guard, levels: state.space.levels });
    }
    let image = state.apply(expr)?;
    let num: Complex64 = state.amplitudes.iter().zip(&image).map(|(a, b)| a.conj() * b).sum();
    Ok(num / state.norm_sqr())
}

/// `dψ/dt = −i H(t) ψ` with the static part and drives as separate sparse matrices.
pub struct Schrodinger {
    parts: Vec<(SparseOperator, Option<TimeFunction>)>,
}

impl Schrodinger {
    pub fn new(space: &FockSpace, h: &Hamiltonian) -> Result<Self, OracleError> {
        let mut parts = vec![(SparseOperator::from_expr(space, &h.operator)?, None)];
        for d in &h.drives {
            parts.push((SparseOperator::from_expr(space, &d.operator)?, Some(d.time)));
        }
        Self::checked(parts)
    }

    /// Static Hamiltonian built directly from the spec; extra terms go through their expressions.
    pub fn from_spec(space: &FockSpace, spec: &HamiltonianSpec) -> Result<Self, OracleError> {
        let mut parts = vec![(SparseOperator::from_spec(space, spec)?, None)];
        for t in &spec.extra_terms {
            parts.push((SparseOperator::from_expr(space, &t.expr)?, t.time));
        }
        Self::checked(parts)
    }

    fn checked(parts: Vec<(SparseOperator, Option<TimeFunction>)>) -> Result<Self, OracleError> {
        let defect = parts.iter().map(|(m, _)| m.hermiticity_defect()).fold(0.0, f64::max);
        if defect > HERMITIAN_TOL {
            return Err(OracleError::NotHermitian(defect));
        }
        Ok(Self { parts })
    }
}

impl OdeRhs for Schrodinger {
    fn dim(&self) -> usize {
        self.parts[0].0.dim()
    }

    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        dy.fill(Complex64::new(0.0, 0.0));
        for (m, f) in &self.parts {
            let w = f.map_or(1.0, |f| f.eval(t));
            m.apply_into(y, dy, Complex64::new(0.0, -w));
        }
    }
}

/// Schrödinger evolution sampled on `grid`; fails when the norm drifts by more than [`NORM_TOL`].
pub fn oracle_evolve(state: &DenseState, h: &Schrodinger, grid: &TimeGrid) -> Result<Vec<DenseState>, OracleError> {
    let rows = solve(h, &state.amplitudes, grid, &IntegratorOptions::default())?;
    let n0 = state.norm_sqr();
    rows.into_iter()
        .enumerate()
        .map(|(k, amplitudes)| {
            let s = DenseState { space: state.space, amplitudes };
            let norm = s.norm_sqr();
            if (norm / n0 - 1.0).abs() > NORM_TOL {
                return Err(OracleError::NormDrift { t: grid.time(k), norm: norm / n0 });
            }
            Ok(s)
        })
        .collect()
}

/// Expectation values of `observables` along the evolution, one row per grid point.
pub fn oracle_trajectories(
    state: &DenseState,
    h: &Schrodinger,
    observables: &[OperatorExpr],
    grid: &TimeGrid,
) -> Result<Vec<Vec<Complex64>>, OracleError> {
    oracle_evolve(state, h, grid)?
        .iter()
        .map(|s| observables.iter().map(|o| oracle_expectation(s, o)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::parse_expr;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn indexing_puts_mode_zero_first() {
        let s = FockSpace::new(3, 5).unwrap();
        let k = s.index(&[1, 2, 3]);
        assert_eq!(k, 25 + 10 + 3);
        assert_eq!((s.level(k, 0), s.level(k, 1), s.level(k, 2)), (1, 2, 3));
        assert!(FockSpace::new(5, 5).is_err());
        assert!(FockSpace::new(1, 4).is_err());
    }

    #[test]
    fn vacuum_number() {
        let st = DenseState::from_spec(&InitialStateSpec::vacuum(2), 6).unwrap();
        assert_eq!(oracle_expectation(&st, &OperatorExpr::number(0)).unwrap(), c(0.0));
    }

    #[test]
    fn truncated_coherent_state() {
        let st = DenseState::from_spec(&InitialStateSpec::coherent_system(c(1.0), 1), 20).unwrap();
        let a = oracle_expectation(&st, &OperatorExpr::annihilate(0)).unwrap();
        assert!((a - c(1.0)).norm() < 1e-8);
    }

    #[test]
    fn pair_position() {
        let spec = InitialStateSpec::EntangledPairs { xi: 1.0, zeta: 0.5, delta: 0.0, bath_modes: 2 };
        let st = DenseState::from_spec(&spec, 6).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-14);
        let q = OperatorExpr::from_symbol(OperatorSymbol::position(1));
        let v = oracle_expectation(&st, &q).unwrap();
        assert!((v - c(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-10);
    }

    #[test]
    fn degree_guard() {
        let st = DenseState::from_spec(&InitialStateSpec::vacuum(1), 6).unwrap();
        let e = parse_expr("a[0]^3").unwrap();
        assert!(matches!(oracle_expectation(&st, &e), Err(OracleError::TruncationGuard { .. })));
    }

    #[test]
    fn spec_and_expression_hamiltonians_agree_inside() {
        let spec = HamiltonianSpec::uncoupled(vec![1.0, 1.3]).with_coupling(0, 1, 0.2);
        let space = FockSpace::new(2, 8).unwrap();
        let direct = SparseOperator::from_spec(&space, &spec).unwrap();
        let h = crate::ehrenfest::build_hamiltonian(&spec).unwrap();
        let via_expr = SparseOperator::from_expr(&space, &h.operator).unwrap();
        assert!(direct.hermiticity_defect() < 1e-15);
        for col in (0..space.dim()).filter(|&k| space.away_from_edge(k, 2)) {
            let mut e = vec![c(0.0); space.dim()];
            e[col] = c(1.0);
            let (x, y) = (direct.apply(&e), via_expr.apply(&e));
            let diff = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14, "column {col}: {diff}");
        }
    }

    #[test]
    fn number_eigenstate_keeps_occupation() {
        let one = vec![c(0.0), c(1.0)];
        let st =
            DenseState::from_spec(&InitialStateSpec::FockSuperpositionProduct { amplitudes: vec![one] }, 6).unwrap();
        let h = Schrodinger::new(st.space(), &Hamiltonian::from(parse_expr("n[0] + 1/2").unwrap())).unwrap();
        let grid = TimeGrid::spanning(0.0, 3.0, 7);
        let rows = oracle_trajectories(&st, &h, &[OperatorExpr::number(0)], &grid).unwrap();
        assert!(rows.iter().all(|r| (r[0] - c(1.0)).norm() < 1e-10));
    }

    #[test]
    fn rejects_non_hermitian() {
        let space = FockSpace::new(1, 6).unwrap();
        let h = Hamiltonian::from(parse_expr("a[0]").unwrap());
        assert!(matches!(Schrodinger::new(&space, &h), Err(OracleError::NotHermitian(_))));
    }
}
