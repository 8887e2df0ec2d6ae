//! Initial-state expectation values `⟨ψ|monomial|ψ⟩` for normal-ordered
//! ladder monomials.
//!
//! Every supported state is a short superposition of *branches*, each a
//! tensor product of small blocks (a coherent mode, a single mode in a
//! finite Fock superposition, or a two-mode pair). All branches share the same
//! block layout, so a matrix element between two branches factorizes into a
//! product of block matrix elements and the cost is linear in the mode count.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ehrenfest::{MomentKey, OdeSystem};
use crate::opalg::OperatorExpr;

/// Declarative initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    /// `⊗_i |α_i⟩`.
    ProductCoherent { alphas: Vec<Complex64> },
    /// `⊗_i Σ_n c_{i,n} |n⟩`, amplitudes indexed by Fock level.
    FockSuperpositionProduct { amplitudes: Vec<Vec<Complex64>> },
    /// System mode 0 entangled with a bath of `bath_modes` modes paired as
    /// (1,2), (3,4), ...:
    ///
    /// `[(|1⟩+|0⟩)/√2 ⊗ Ψ₁(ξ) + δ (|1⟩−|0⟩)/√2 ⊗ Ψ₂(ζ)] / √(1+δ²)` with
    /// each pair in `(|11⟩+|00⟩+ξ(|01⟩+|10⟩))/√(2(1+ξ²))` for Ψ₁ and
    /// `(|11⟩−|00⟩+ζ(|10⟩−|01⟩))/√(2(1+ζ²))` for Ψ₂. In `|xy⟩`, `x` is the
    /// odd-indexed mode of the pair.
    EntangledPairs { xi: f64, zeta: f64, delta: f64, bath_modes: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("monomial <{key}> references mode {mode}, but the state covers {mode_count} modes")]
    ModeOutOfRange { key: String, mode: u32, mode_count: usize },
    #[error("state covers {state} modes but the system needs {system}")]
    ModeCountMismatch { state: usize, system: usize },
    #[error("Fock amplitudes of mode {mode} have norm² {norm_sq}, expected 1")]
    NotNormalized { mode: usize, norm_sq: f64 },
    #[error("entangled state needs an even number of bath modes, got {0}")]
    OddBath(usize),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("expression is not canonical: {0}")]
    NotCanonical(String),
    #[error("state has zero norm")]
    ZeroNorm,
}

const UNIT_NORM_TOL: f64 = 1e-12;

impl InitialStateSpec {
    /// Vacuum on every mode.
    pub fn vacuum(mode_count: usize) -> Self {
        InitialStateSpec::ProductCoherent { alphas: vec![Complex64::new(0.0, 0.0); mode_count] }
    }

    /// `|α⟩` on mode 0 and vacuum elsewhere.
    pub fn coherent_system(alpha: Complex64, mode_count: usize) -> Self {
        let mut alphas = vec![Complex64::new(0.0, 0.0); mode_count];
        if let Some(a) = alphas.first_mut() {
            *a = alpha;
        }
        InitialStateSpec::ProductCoherent { alphas }
    }

    pub fn mode_count(&self) -> usize {
        match self {
            InitialStateSpec::ProductCoherent { alphas } => alphas.len(),
            InitialStateSpec::FockSuperpositionProduct { amplitudes } => amplitudes.len(),
            InitialStateSpec::EntangledPairs { bath_modes, .. } => 1 + bath_modes,
        }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        match self {
            InitialStateSpec::ProductCoherent { alphas } => {
                if alphas.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
                    return Err(StateError::NonFinite("coherent amplitude"));
                }
            }
            InitialStateSpec::FockSuperpositionProduct { amplitudes } => {
                for (mode, amps) in amplitudes.iter().enumerate() {
                    let norm_sq: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
                    if !norm_sq.is_finite() {
                        return Err(StateError::NonFinite("Fock amplitude"));
                    }
                    if (norm_sq - 1.0).abs() > UNIT_NORM_TOL {
                        return Err(StateError::NotNormalized { mode, norm_sq });
                    }
                }
            }
            InitialStateSpec::EntangledPairs { xi, zeta, delta, bath_modes } => {
                if bath_modes % 2 != 0 {
                    return Err(StateError::OddBath(*bath_modes));
                }
                if ![xi, zeta, delta].iter().all(|x| x.is_finite()) {
                    return Err(StateError::NonFinite("entanglement parameter"));
                }
            }
        }
        Ok(())
    }

    /// Validates and factorizes the state for repeated evaluation.
    pub fn prepare(&self) -> Result<PreparedState, StateError> {
        self.validate()?;
        PreparedState::new(self)
    }

    /// `⟨ψ|key|ψ⟩`.
    pub fn expectation(&self, key: &MomentKey) -> Result<Complex64, StateError> {
        self.prepare()?.expectation(key)
    }

    /// `⟨ψ|expr|ψ⟩` for any expression, after canonicalization.
    pub fn expectation_expr(&self, expr: &OperatorExpr) -> Result<Complex64, StateError> {
        self.prepare()?.expectation_expr(expr)
    }

    /// `expectation` of each tracked variable of `sys`, in variable order.
    pub fn initial_vector(&self, sys: &OdeSystem) -> Result<Vec<Complex64>, StateError> {
        self.prepare()?.initial_vector(sys)
    }
}

/// Amplitudes over Fock levels of one block (one or two modes).
#[derive(Clone, Debug, PartialEq)]
struct FockBlock {
    entries: Vec<([u32; 2], Complex64)>,
}

#[derive(Clone, Debug, PartialEq)]
enum BlockState {
    Coherent(Complex64),
    Fock(FockBlock),
}

#[derive(Clone, Debug)]
struct Branch {
    weight: Complex64,
    blocks: Vec<BlockState>,
}

/// A state decomposed into branches over a shared block layout.
#[derive(Clone, Debug)]
pub struct PreparedState {
    mode_count: usize,
    /// Modes of each block, one or two, ascending.
    layout: Vec<Vec<u32>>,
    /// Block index and slot within the block for every mode.
    locate: Vec<(usize, usize)>,
    branches: Vec<Branch>,
    raw_norm: f64,
}

fn fock_single(amps: &[Complex64]) -> BlockState {
    let entries =
        amps.iter().enumerate().filter(|(_, c)| c.norm_sqr() > 0.0).map(|(n, &c)| ([n as u32, 0], c)).collect();
    BlockState::Fock(FockBlock { entries })
}

fn fock_pair(entries: &[([u32; 2], f64)], scale: f64) -> BlockState {
    let entries =
        entries.iter().filter(|(_, c)| *c != 0.0).map(|&(l, c)| (l, Complex64::new(c * scale, 0.0))).collect();
    BlockState::Fock(FockBlock { entries })
}

impl PreparedState {
    fn new(spec: &InitialStateSpec) -> Result<Self, StateError> {
        let (layout, branches): (Vec<Vec<u32>>, Vec<Branch>) = match spec {
            InitialStateSpec::ProductCoherent { alphas } => (
                (0..alphas.len() as u32).map(|m| vec![m]).collect(),
                vec![Branch {
                    weight: Complex64::new(1.0, 0.0),
                    blocks: alphas.iter().map(|&a| BlockState::Coherent(a)).collect(),
                }],
            ),
            InitialStateSpec::FockSuperpositionProduct { amplitudes } => (
                (0..amplitudes.len() as u32).map(|m| vec![m]).collect(),
                vec![Branch {
                    weight: Complex64::new(1.0, 0.0),
                    blocks: amplitudes.iter().map(|a| fock_single(a)).collect(),
                }],
            ),
            &InitialStateSpec::EntangledPairs { xi, zeta, delta, bath_modes } => {
                let pairs = bath_modes / 2;
                let mut layout = vec![vec![0u32]];
                layout.extend((0..pairs as u32).map(|k| vec![2 * k + 1, 2 * k + 2]));
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let s1 = fock_single(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)]);
                let s2 = fock_single(&[Complex64::new(-h, 0.0), Complex64::new(h, 0.0)]);
                let psi1 = fock_pair(
                    &[([1, 1], 1.0), ([0, 0], 1.0), ([0, 1], xi), ([1, 0], xi)],
                    1.0 / (2.0 * (1.0 + xi * xi)).sqrt(),
                );
                let psi2 = fock_pair(
                    &[([1, 1], 1.0), ([0, 0], -1.0), ([1, 0], zeta), ([0, 1], -zeta)],
                    1.0 / (2.0 * (1.0 + zeta * zeta)).sqrt(),
                );
                let norm = 1.0 / (1.0 + delta * delta).sqrt();
                let branch = |weight: f64, sys: BlockState, pair: BlockState| {
                    let mut blocks = vec![sys];
                    blocks.extend(std::iter::repeat_n(pair, pairs));
                    Branch { weight: Complex64::new(weight, 0.0), blocks }
                };
                let mut branches = vec![branch(norm, s1, psi1)];
                if delta != 0.0 {
                    branches.push(branch(delta * norm, s2, psi2));
                }
                (layout, branches)
            }
        };
        let mode_count = spec.mode_count();
        let mut locate = vec![(0, 0); mode_count];
        for (b, modes) in layout.iter().enumerate() {
            for (slot, &m) in modes.iter().enumerate() {
                locate[m as usize] = (b, slot);
            }
        }
        let mut state = Self { mode_count, layout, locate, branches, raw_norm: 1.0 };
        let raw = state.unnormalized(&[]).re;
        if !(raw > 0.0) {
            return Err(StateError::ZeroNorm);
        }
        state.raw_norm = raw;
        Ok(state)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// `⟨ψ|ψ⟩` as constructed, before renormalization.
    pub fn raw_norm(&self) -> f64 {
        self.raw_norm
    }

    /// `⟨ψ|key|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, key: &MomentKey) -> Result<Complex64, StateError> {
        if let Some(m) = key.max_mode() {
            if m as usize >= self.mode_count {
                return Err(StateError::ModeOutOfRange { key: key.to_string(), mode: m, mode_count: self.mode_count });
            }
        }
        let mut powers = Vec::new();
        for mode in key.modes() {
            let (c, a) = key.powers(mode);
            powers.push((mode, c, a));
        }
        Ok(self.unnormalized(&powers) / self.raw_norm)
    }

    pub fn expectation_expr(&self, expr: &OperatorExpr) -> Result<Complex64, StateError> {
        let expr = expr.canonicalize();
        let mut acc = Complex64::new(0.0, 0.0);
        for t in expr.terms() {
            let key = MomentKey::new(t.factors.clone()).map_err(|e| StateError::NotCanonical(e.to_string()))?;
            acc += t.coeff.to_c64() * self.expectation(&key)?;
        }
        Ok(acc)
    }

    pub fn initial_vector(&self, sys: &OdeSystem) -> Result<Vec<Complex64>, StateError> {
        let needed = sys.variables().iter().filter_map(MomentKey::max_mode).max().map_or(0, |m| m as usize + 1);
        if needed > self.mode_count {
            return Err(StateError::ModeCountMismatch { state: self.mode_count, system: needed });
        }
        sys.variables().iter().map(|k| self.expectation(k)).collect()
    }

    /// `Σ_{b,b'} w_b* w_b' Π_blocks ⟨b|M|b'⟩` for `M = Π a†^c a^n` given as `(mode, c, n)`.
    fn unnormalized(&self, powers: &[(u32, u32, u32)]) -> Complex64 {
        // Per block: (create, annihilate) powers for each slot.
        let mut block_powers = vec![[(0u32, 0u32); 2]; self.layout.len()];
        for &(mode, c, n) in powers {
            let (b, slot) = self.locate[mode as usize];
            block_powers[b][slot] = (c, n);
        }
        let mut total = Complex64::new(0.0, 0.0);
        for bra in &self.branches {
            for ket in &self.branches {
                let mut prod = bra.weight.conj() * ket.weight;
                for (k, bp) in block_powers.iter().enumerate() {
                    if prod == Complex64::new(0.0, 0.0) {
                        break;
                    }
                    prod *= block_element(&bra.blocks[k], *bp, &ket.blocks[k]);
                }
                total += prod;
            }
        }
        total
    }
}

/// `a^n` on slot `slot` of every entry: `a^n|k⟩ = √(k!/(k−n)!) |k−n⟩`.
fn lower(block: &FockBlock, slot: usize, n: u32) -> FockBlock {
    if n == 0 {
        return block.clone();
    }
    let entries = block
        .entries
        .iter()
        .filter(|(levels, _)| levels[slot] >= n)
        .map(|&(mut levels, c)| {
            let k = levels[slot];
            let factor: f64 = (k - n + 1..=k).map(|j| j as f64).product::<f64>().sqrt();
            levels[slot] -= n;
            (levels, c * factor)
        })
        .collect();
    FockBlock { entries }
}

fn inner(u: &FockBlock, v: &FockBlock) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (lu, cu) in &u.entries {
        for (lv, cv) in &v.entries {
            if lu == lv {
                acc += cu.conj() * cv;
            }
        }
    }
    acc
}

/// `⟨k|α⟩ = e^{−|α|²/2} α^k / √k!`.
fn coherent_amplitude(alpha: Complex64, k: u32) -> Complex64 {
    let mut z = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for j in 1..=k {
        z *= alpha / (j as f64).sqrt();
    }
    z
}

/// `⟨bra| Π_slots a†^c a^n |ket⟩` for one block.
fn block_element(bra: &BlockState, powers: [(u32, u32); 2], ket: &BlockState) -> Complex64 {
    let (c, n) = powers[0];
    match (bra, ket) {
        (BlockState::Coherent(a), BlockState::Coherent(b)) => {
            let overlap = (-(a.norm_sqr() + b.norm_sqr()) / 2.0 + a.conj() * b).exp();
            a.conj().powu(c) * b.powu(n) * overlap
        }
        (BlockState::Coherent(a), BlockState::Fock(v)) => {
            let v = lower(v, 0, n);
            let s: Complex64 = v.entries.iter().map(|(l, cv)| coherent_amplitude(*a, l[0]).conj() * cv).sum();
            a.conj().powu(c) * s
        }
        (BlockState::Fock(u), BlockState::Coherent(b)) => {
            let u = lower(u, 0, c);
            let s: Complex64 = u.entries.iter().map(|(l, cu)| cu.conj() * coherent_amplitude(*b, l[0])).sum();
            b.powu(n) * s
        }
        (BlockState::Fock(u), BlockState::Fock(v)) => {
            let (c1, n1) = powers[1];
            let u = lower(&lower(u, 0, c), 1, c1);
            let v = lower(&lower(v, 0, n), 1, n1);
            inner(&u, &v)
        }
    }
}
