use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::One;

use super::coefficient::Coefficient;
use super::symbol::{OperatorSymbol, SymbolKind};

/// Errors raised by the operator algebra.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("normal ordering accepts ladder operators only; found `{0}` (convert with to_ladder first)")]
    NotLadder(OperatorSymbol),
}

/// One product of operators with its scalar prefactor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Coefficient,
    pub factors: Vec<OperatorSymbol>,
}

impl Term {
    pub fn new(coeff: Coefficient, factors: Vec<OperatorSymbol>) -> Self {
        Self { coeff, factors }
    }

    /// Number of non-identity factors.
    pub fn degree(&self) -> usize {
        self.factors.iter().filter(|s| s.kind != SymbolKind::Identity).count()
    }
}

/// A non-commutative polynomial in mode-indexed bosonic operators.
///
/// Terms are kept sorted by factor sequence with like terms merged and no
/// zero coefficients, so structurally equal expressions compare equal.
/// The *canonical* form additionally uses ladder operators only, sorted by
/// mode and normal ordered within each mode; every algebraic operation
/// returns canonical output. Expressions built through [`OperatorExpr::from_terms`]
/// or [`OperatorExpr::from_symbol`] may be raw until canonicalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OperatorExpr {
    terms: Vec<Term>,
}

type Accum = BTreeMap<Vec<OperatorSymbol>, Coefficient>;

fn accumulate(acc: &mut Accum, factors: Vec<OperatorSymbol>, coeff: Coefficient) {
    if coeff.is_zero() {
        return;
    }
    match acc.get_mut(&factors) {
        Some(c) => *c += &coeff,
        None => {
            acc.insert(factors, coeff);
        }
    }
}

fn from_accum(acc: Accum) -> OperatorExpr {
    let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(factors, coeff)| Term { coeff, factors }).collect();
    OperatorExpr { terms }
}

/// Ladder powers of one mode inside a canonical monomial: `a†^create a^annihilate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Run {
    mode: u32,
    create: u32,
    annihilate: u32,
}

fn runs(factors: &[OperatorSymbol]) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for s in factors {
        if out.last().map(|r| r.mode) != Some(s.mode) {
            out.push(Run { mode: s.mode, create: 0, annihilate: 0 });
        }
        let run = out.last_mut().expect("pushed above");
        match s.kind {
            SymbolKind::Create => run.create += 1,
            SymbolKind::Annihilate => run.annihilate += 1,
            _ => unreachable!("runs() is only called on canonical ladder monomials"),
        }
    }
    out
}

fn push_run(out: &mut Vec<OperatorSymbol>, run: Run) {
    out.extend(std::iter::repeat_n(OperatorSymbol::create(run.mode), run.create as usize));
    out.extend(std::iter::repeat_n(OperatorSymbol::annihilate(run.mode), run.annihilate as usize));
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

fn falling_factorial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j))
}

/// Product of two canonical monomials, returned as canonical monomials with
/// integer weights.
///
/// For a shared mode, `a†^m1 a^n1 · a†^m2 a^n2 = Σ_k k!·C(n1,k)·C(m2,k) a†^(m1+m2-k) a^(n1+n2-k)`.
fn multiply_monomials(x: &[OperatorSymbol], y: &[OperatorSymbol]) -> Vec<(Vec<OperatorSymbol>, BigInt)> {
    let rx = runs(x);
    let ry = runs(y);
    let mut partials: Vec<(Vec<OperatorSymbol>, BigInt)> = vec![(Vec::with_capacity(x.len() + y.len()), BigInt::one())];
    let (mut i, mut j) = (0, 0);
    while i < rx.len() || j < ry.len() {
        let take_x = j >= ry.len() || (i < rx.len() && rx[i].mode < ry[j].mode);
        let take_y = i >= rx.len() || (j < ry.len() && ry[j].mode < rx[i].mode);
        if take_x {
            partials.iter_mut().for_each(|(f, _)| push_run(f, rx[i]));
            i += 1;
        } else if take_y {
            partials.iter_mut().for_each(|(f, _)| push_run(f, ry[j]));
            j += 1;
        } else {
            let (l, r) = (rx[i], ry[j]);
            let kmax = l.annihilate.min(r.create);
            let mut next = Vec::with_capacity(partials.len() * (kmax as usize + 1));
            for (f, w) in &partials {
                for k in 0..=kmax {
                    let weight = falling_factorial(l.annihilate, k) * binomial(r.create, k);
                    let mut f = f.clone();
                    push_run(
                        &mut f,
                        Run {
                            mode: l.mode,
                            create: l.create + r.create - k,
                            annihilate: l.annihilate + r.annihilate - k,
                        },
                    );
                    next.push((f, w * weight));
                }
            }
            partials = next;
            i += 1;
            j += 1;
        }
    }
    partials
}

fn is_canonical_monomial(factors: &[OperatorSymbol]) -> bool {
    factors.iter().all(|s| s.kind.is_ladder()) && factors.windows(2).all(|w| w[0] <= w[1])
}

fn sorted_modes(factors: &[OperatorSymbol]) -> Vec<u32> {
    let mut modes: Vec<u32> = factors.iter().map(|s| s.mode).collect();
    modes.dedup();
    modes
}

fn modes_overlap(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Canonical ladder expansion of a single factor.
fn ladder_expansion(sym: OperatorSymbol) -> Vec<(Vec<OperatorSymbol>, Coefficient)> {
    let m = sym.mode;
    let h = Coefficient::inv_sqrt2();
    match sym.kind {
        SymbolKind::Create => vec![(vec![OperatorSymbol::create(m)], Coefficient::one())],
        SymbolKind::Annihilate => vec![(vec![OperatorSymbol::annihilate(m)], Coefficient::one())],
        // q = (a + a†)/√2
        SymbolKind::Position => {
            vec![(vec![OperatorSymbol::create(m)], h.clone()), (vec![OperatorSymbol::annihilate(m)], h)]
        }
        // p = -i(a - a†)/√2
        SymbolKind::Momentum => {
            let ih = &Coefficient::i() * &h;
            vec![(vec![OperatorSymbol::create(m)], ih.clone()), (vec![OperatorSymbol::annihilate(m)], -ih)]
        }
        SymbolKind::Number => {
            vec![(vec![OperatorSymbol::create(m), OperatorSymbol::annihilate(m)], Coefficient::one())]
        }
        SymbolKind::Identity => vec![(Vec::new(), Coefficient::one())],
    }
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(Coefficient::one())
    }

    pub fn scalar(c: Coefficient) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: vec![Term { coeff: c, factors: Vec::new() }] }
    }

    /// A single-symbol expression, stored as given (raw for q, p, n).
    pub fn from_symbol(sym: OperatorSymbol) -> Self {
        Self::from_terms([Term::new(Coefficient::one(), vec![sym])])
    }

    /// Builds an expression from arbitrary terms, merging identical factor
    /// sequences but leaving operator order untouched.
    pub fn from_terms(terms: impl IntoIterator<Item = Term>) -> Self {
        let mut acc = Accum::new();
        for t in terms {
            let factors: Vec<OperatorSymbol> =
                t.factors.into_iter().filter(|s| s.kind != SymbolKind::Identity).collect();
            accumulate(&mut acc, factors, t.coeff);
        }
        from_accum(acc)
    }

    /// A single canonical monomial with unit coefficient. The factors must
    /// already be in canonical order.
    pub(crate) fn monomial(factors: Vec<OperatorSymbol>) -> Self {
        debug_assert!(is_canonical_monomial(&factors));
        Self { terms: vec![Term { coeff: Coefficient::one(), factors }] }
    }

    pub fn create(mode: u32) -> Self {
        Self::from_symbol(OperatorSymbol::create(mode))
    }

    pub fn annihilate(mode: u32) -> Self {
        Self::from_symbol(OperatorSymbol::annihilate(mode))
    }

    /// Canonical ladder form of `q`.
    pub fn position(mode: u32) -> Self {
        Self::from_symbol(OperatorSymbol::position(mode)).canonicalize()
    }

    /// Canonical ladder form of `p`.
    pub fn momentum(mode: u32) -> Self {
        Self::from_symbol(OperatorSymbol::momentum(mode)).canonicalize()
    }

    /// Canonical ladder form of `n = a†a`.
    pub fn number(mode: u32) -> Self {
        Self::from_symbol(OperatorSymbol::number(mode)).canonicalize()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest factor count over all terms (0 for scalars and zero).
    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// Sorted list of mode indices referenced anywhere.
    pub fn modes(&self) -> Vec<u32> {
        let mut modes: Vec<u32> = self
            .terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .filter(|s| s.kind != SymbolKind::Identity)
            .map(|s| s.mode)
            .collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }

    pub fn coefficient_of(&self, factors: &[OperatorSymbol]) -> Option<&Coefficient> {
        self.terms.binary_search_by(|t| t.factors.as_slice().cmp(factors)).ok().map(|k| &self.terms[k].coeff)
    }

    pub fn is_canonical(&self) -> bool {
        self.terms.iter().all(|t| is_canonical_monomial(&t.factors))
    }

    /// Rewrites into canonical form: ladder operators only, sorted by mode,
    /// normal ordered within each mode. Idempotent.
    pub fn canonicalize(&self) -> Self {
        if self.is_canonical() {
            return self.clone();
        }
        let mut acc = Accum::new();
        for term in &self.terms {
            let mut partial: Accum = Accum::new();
            partial.insert(Vec::new(), term.coeff.clone());
            for &sym in &term.factors {
                let expansion = ladder_expansion(sym);
                let mut next = Accum::new();
                for (f, c) in &partial {
                    for (ef, ec) in &expansion {
                        let c = c * ec;
                        for (prod, w) in multiply_monomials(f, ef) {
                            accumulate(&mut next, prod, c.scale_bigint(&w));
                        }
                    }
                }
                partial = next;
            }
            for (f, c) in partial {
                accumulate(&mut acc, f, c);
            }
        }
        from_accum(acc)
    }

    /// Rewrites every position, momentum and number symbol into creation and
    /// annihilation operators; the result is canonical.
    pub fn to_ladder(&self) -> Self {
        self.canonicalize()
    }

    /// Moves all creation operators left of annihilation operators in every
    /// mode using `[a, a†] = 1`. Rejects q, p and n symbols.
    pub fn normal_order(&self) -> Result<Self, AlgebraError> {
        for t in &self.terms {
            if let Some(&bad) = t.factors.iter().find(|s| !s.kind.is_ladder() && s.kind != SymbolKind::Identity) {
                return Err(AlgebraError::NotLadder(bad));
            }
        }
        Ok(self.canonicalize())
    }

    /// Non-commutative product `self · rhs` in canonical form.
    pub fn multiply(&self, rhs: &OperatorExpr) -> OperatorExpr {
        let lhs = self.canonicalize();
        let rhs = rhs.canonicalize();
        let mut acc = Accum::new();
        for a in &lhs.terms {
            for b in &rhs.terms {
                let c = &a.coeff * &b.coeff;
                for (prod, w) in multiply_monomials(&a.factors, &b.factors) {
                    accumulate(&mut acc, prod, c.scale_bigint(&w));
                }
            }
        }
        from_accum(acc)
    }

    /// `[self, rhs] = self·rhs − rhs·self` in canonical form.
    ///
    /// Term pairs acting on disjoint modes commute and are skipped.
    pub fn commutator(&self, rhs: &OperatorExpr) -> OperatorExpr {
        let lhs = self.canonicalize();
        let rhs = rhs.canonicalize();
        let rhs_modes: Vec<Vec<u32>> = rhs.terms.iter().map(|t| sorted_modes(&t.factors)).collect();
        let mut acc = Accum::new();
        for a in &lhs.terms {
            let a_modes = sorted_modes(&a.factors);
            for (b, b_modes) in rhs.terms.iter().zip(&rhs_modes) {
                if !modes_overlap(&a_modes, b_modes) {
                    continue;
                }
                let c = &a.coeff * &b.coeff;
                for (prod, w) in multiply_monomials(&a.factors, &b.factors) {
                    accumulate(&mut acc, prod, c.scale_bigint(&w));
                }
                let neg = -&c;
                for (prod, w) in multiply_monomials(&b.factors, &a.factors) {
                    accumulate(&mut acc, prod, neg.scale_bigint(&w));
                }
            }
        }
        from_accum(acc)
    }

    /// Hermitian adjoint, in canonical form.
    pub fn adjoint(&self) -> OperatorExpr {
        let raw = OperatorExpr::from_terms(
            self.terms.iter().map(|t| Term::new(t.coeff.conj(), t.factors.iter().rev().map(|s| s.dagger()).collect())),
        );
        raw.canonicalize()
    }

    pub fn is_hermitian(&self) -> bool {
        let c = self.canonicalize();
        c.adjoint() == c
    }

    pub fn scale(&self, c: &Coefficient) -> OperatorExpr {
        if c.is_zero() {
            return OperatorExpr::zero();
        }
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, factors: t.factors.clone() })
                .filter(|t| !t.coeff.is_zero())
                .collect(),
        }
    }

    fn combine(&self, rhs: &OperatorExpr, sign: bool) -> OperatorExpr {
        let mut acc = Accum::new();
        for t in &self.terms {
            accumulate(&mut acc, t.factors.clone(), t.coeff.clone());
        }
        for t in &rhs.terms {
            let c = if sign { t.coeff.clone() } else { -&t.coeff };
            accumulate(&mut acc, t.factors.clone(), c);
        }
        from_accum(acc)
    }
}

impl Add for &OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: &OperatorExpr) -> OperatorExpr {
        self.combine(rhs, true)
    }
}

impl Add for OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: OperatorExpr) -> OperatorExpr {
        self.combine(&rhs, true)
    }
}

impl Sub for &OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: &OperatorExpr) -> OperatorExpr {
        self.combine(rhs, false)
    }
}

impl Sub for OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: OperatorExpr) -> OperatorExpr {
        self.combine(&rhs, false)
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&Coefficient::from_integer(-1))
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        -&self
    }
}

impl Mul for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        self.multiply(rhs)
    }
}

impl Mul for OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: OperatorExpr) -> OperatorExpr {
        self.multiply(&rhs)
    }
}

impl Mul<&OperatorExpr> for &Coefficient {
    type Output = OperatorExpr;
    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        rhs.scale(self)
    }
}

/// `[a, b]`.
pub fn commutator(a: &OperatorExpr, b: &OperatorExpr) -> OperatorExpr {
    a.commutator(b)
}

/// `a · b`.
pub fn multiply(a: &OperatorExpr, b: &OperatorExpr) -> OperatorExpr {
    a.multiply(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(m: u32) -> OperatorExpr {
        OperatorExpr::annihilate(m)
    }
    fn ad(m: u32) -> OperatorExpr {
        OperatorExpr::create(m)
    }

    #[test]
    fn single_commutation() {
        let raw = OperatorExpr::from_terms([Term::new(
            Coefficient::one(),
            vec![OperatorSymbol::annihilate(0), OperatorSymbol::create(0)],
        )]);
        let expected = &(&ad(0) * &a(0)) + &OperatorExpr::identity();
        assert_eq!(raw.normal_order().unwrap(), expected);
    }

    #[test]
    fn already_normal_is_unchanged() {
        let e = &ad(0) * &a(0);
        assert_eq!(e.terms().len(), 1);
        assert_eq!(e.normal_order().unwrap(), e);
    }

    #[test]
    fn triple_word() {
        // a a a† = a† a a + 2a
        let raw = OperatorExpr::from_terms([Term::new(
            Coefficient::one(),
            vec![OperatorSymbol::annihilate(0), OperatorSymbol::annihilate(0), OperatorSymbol::create(0)],
        )]);
        let expected = &(&(&ad(0) * &a(0)) * &a(0)) + &a(0).scale(&Coefficient::from_integer(2));
        assert_eq!(raw.normal_order().unwrap(), expected);
    }

    #[test]
    fn normal_order_rejects_quadratures() {
        let e = OperatorExpr::from_symbol(OperatorSymbol::position(1));
        assert_eq!(e.normal_order(), Err(AlgebraError::NotLadder(OperatorSymbol::position(1))));
        let e = OperatorExpr::from_symbol(OperatorSymbol::number(0));
        assert!(e.normal_order().is_err());
    }

    #[test]
    fn identity_is_neutral() {
        assert_eq!(OperatorExpr::identity().multiply(&ad(0)), ad(0));
    }

    #[test]
    fn cross_modes_commute() {
        assert!(a(0).commutator(&ad(1)).is_zero());
        assert_eq!((&a(1) * &ad(0)).terms()[0].factors, vec![OperatorSymbol::create(0), OperatorSymbol::annihilate(1)]);
    }

    #[test]
    fn number_lowers_annihilator() {
        assert_eq!(OperatorExpr::number(0).commutator(&a(0)), -a(0));
    }

    #[test]
    fn number_to_ladder() {
        assert_eq!(OperatorExpr::from_symbol(OperatorSymbol::number(0)).to_ladder(), &ad(0) * &a(0));
    }

    #[test]
    fn adjoint_of_product() {
        let e = &(&ad(0) * &a(1)) * &a(1);
        assert_eq!(e.adjoint(), &(&ad(1) * &ad(1)) * &a(0));
        assert!(OperatorExpr::position(2).is_hermitian());
        assert!(!a(0).is_hermitian());
    }
}
