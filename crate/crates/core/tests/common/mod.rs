//! Generators and property checks shared by the integration tests.
#![allow(dead_code)]

use ehrenfest_core::opalg::{parse_expr, Coefficient, OperatorExpr, OperatorSymbol, SymbolKind, Term};
use ehrenfest_core::oracle::{apply_to_basis, FockSpace, SparseKet};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const MODES: u32 = 3;
pub const MAX_FACTORS: usize = 3;

pub fn arb_coeff() -> impl Strategy<Value = Coefficient> {
    (-3i64..=3, 1i64..=3, -2i64..=2, 0u8..4).prop_map(|(a, b, c, shape)| {
        let re = Coefficient::from_ratio(a, b);
        let im = Coefficient::from_integer(c) * Coefficient::i();
        match shape {
            0 => re,
            1 => re + im,
            2 => re * Coefficient::sqrt2(),
            _ => re + im * Coefficient::inv_sqrt2(),
        }
    })
}

pub fn arb_symbol() -> impl Strategy<Value = OperatorSymbol> {
    let kinds = prop_oneof![
        3 => Just(SymbolKind::Create),
        3 => Just(SymbolKind::Annihilate),
        1 => Just(SymbolKind::Position),
        1 => Just(SymbolKind::Momentum),
        1 => Just(SymbolKind::Number),
    ];
    (kinds, 0..MODES).prop_map(|(k, m)| OperatorSymbol::new(k, m))
}

/// Expression as written, possibly with quadratures and unordered factors.
pub fn arb_raw_expr() -> impl Strategy<Value = OperatorExpr> {
    let term = (arb_coeff(), prop::collection::vec(arb_symbol(), 0..=MAX_FACTORS)).prop_map(|(c, f)| Term::new(c, f));
    prop::collection::vec(term, 1..=4).prop_map(OperatorExpr::from_terms)
}

pub fn arb_expr() -> impl Strategy<Value = OperatorExpr> {
    arb_raw_expr().prop_map(|e| e.canonicalize())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn check_canonical_idempotent(raw: &OperatorExpr) -> Result<(), TestCaseError> {
    let once = raw.canonicalize();
    ensure(once.is_canonical(), || format!("not canonical: {once}"))?;
    ensure(once.canonicalize() == once, || format!("canonicalize not idempotent on {once}"))?;
    ensure(once.normal_order().as_ref() == Ok(&once), || format!("normal_order changed {once}"))
}

pub fn check_print_parse(e: &OperatorExpr) -> Result<(), TestCaseError> {
    let text = e.to_string();
    let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
    ensure(&back == e, || format!("{text} reparsed as {back}"))
}

pub fn check_ring_laws(a: &OperatorExpr, b: &OperatorExpr, c: &OperatorExpr) -> Result<(), TestCaseError> {
    ensure(a.multiply(b).multiply(c) == a.multiply(&b.multiply(c)), || format!("associativity: ({a})({b})({c})"))?;
    ensure(a.multiply(&(b + c)) == &a.multiply(b) + &a.multiply(c), || format!("left distributivity: {a}"))?;
    ensure((a + b).multiply(c) == &a.multiply(c) + &b.multiply(c), || format!("right distributivity: {c}"))
}

pub fn check_commutator_laws(
    a: &OperatorExpr,
    b: &OperatorExpr,
    c: &OperatorExpr,
    x: &Coefficient,
    y: &Coefficient,
) -> Result<(), TestCaseError> {
    let lin = (&a.scale(x) + &b.scale(y)).commutator(c);
    ensure(lin == &a.commutator(c).scale(x) + &b.commutator(c).scale(y), || "bilinearity in the first slot".into())?;
    let lin = c.commutator(&(&a.scale(x) + &b.scale(y)));
    ensure(lin == &c.commutator(a).scale(x) + &c.commutator(b).scale(y), || "bilinearity in the second slot".into())?;
    ensure(a.commutator(b) == -b.commutator(a), || format!("antisymmetry: [{a}, {b}]"))?;
    let jacobi = &(&a.commutator(&b.commutator(c)) + &b.commutator(&c.commutator(a))) + &c.commutator(&a.commutator(b));
    ensure(jacobi.is_zero(), || format!("Jacobi identity fails: {jacobi}"))
}

fn add_into(acc: &mut Vec<Complex64>, ket: &SparseKet, scale: Complex64) {
    for &(j, v) in ket {
        acc[j] += scale * v;
    }
}

fn apply_sparse(space: &FockSpace, e: &OperatorExpr, ket: &SparseKet) -> SparseKet {
    let mut out = SparseKet::new();
    for &(j, c) in ket {
        out.extend(apply_to_basis(space, e, j).into_iter().map(|(k, v)| (k, v * c)));
    }
    out
}

fn largest_gap(dim: usize, lhs: &SparseKet, rhs: &[(SparseKet, Complex64)]) -> f64 {
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    add_into(&mut acc, lhs, Complex64::new(1.0, 0.0));
    for (ket, s) in rhs {
        add_into(&mut acc, ket, -s);
    }
    acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Truncated-matrix checks on basis kets far enough from the truncation edge
/// that no intermediate state leaves the space:
/// raw and canonical forms act alike, products act as matrix products and
/// commutators as matrix commutators.
pub fn check_matrix_fidelity(raw_a: &OperatorExpr, raw_b: &OperatorExpr, levels: usize) -> Result<(), TestCaseError> {
    let space = FockSpace::new(MODES as usize, levels).expect("small space");
    let (a, b) = (raw_a.canonicalize(), raw_b.canonicalize());
    let margin = raw_a.degree().max(a.degree()) + raw_b.degree().max(b.degree()) + 1;
    let product = a.multiply(&b);
    let comm = a.commutator(&b);
    let one = Complex64::new(1.0, 0.0);
    for col in (0..space.dim()).filter(|&k| space.away_from_edge(k, margin)) {
        let e: SparseKet = vec![(col, one)];
        let gap =
            largest_gap(space.dim(), &apply_to_basis(&space, raw_a, col), &[(apply_to_basis(&space, &a, col), one)]);
        ensure(gap < 1e-10, || format!("canonical form of {raw_a} differs on ket {col}: {gap:e}"))?;
        let ab = apply_sparse(&space, &a, &apply_sparse(&space, &b, &e));
        let ba = apply_sparse(&space, &b, &apply_sparse(&space, &a, &e));
        let gap = largest_gap(space.dim(), &apply_to_basis(&space, &product, col), &[(ab.clone(), one)]);
        ensure(gap < 1e-10, || format!("product ({a})({b}) differs on ket {col}: {gap:e}"))?;
        let gap = largest_gap(space.dim(), &apply_to_basis(&space, &comm, col), &[(ab, one), (ba, -one)]);
        ensure(gap < 1e-10, || format!("commutator [{a}, {b}] differs on ket {col}: {gap:e}"))?;
    }
    Ok(())
}
