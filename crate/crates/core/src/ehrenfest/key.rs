use std::fmt;
use std::str::FromStr;

use crate::opalg::{parse_expr, write_factors, OperatorExpr, OperatorSymbol, SymbolKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("moment key `{0}` is not a normal-ordered ladder monomial")]
    NotCanonical(String),
    #[error("`{0}` is not a single monomial with unit coefficient")]
    NotMonomial(String),
    #[error(transparent)]
    Parse(#[from] crate::opalg::ParseError),
}

/// Identity of a tracked expectation value: a normal-ordered ladder monomial.
///
/// Two keys are equal iff their factor sequences are identical. The empty
/// sequence is the identity, whose expectation is always 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentKey(Vec<OperatorSymbol>);

impl MomentKey {
    pub fn new(factors: Vec<OperatorSymbol>) -> Result<Self, KeyError> {
        let ladder = factors.iter().all(|s| s.kind.is_ladder());
        if !ladder || !factors.windows(2).all(|w| w[0] <= w[1]) {
            let mut text = String::new();
            let _ = write_factors(&mut text, &factors);
            return Err(KeyError::NotCanonical(text));
        }
        Ok(Self(factors))
    }

    pub(crate) fn new_unchecked(factors: Vec<OperatorSymbol>) -> Self {
        debug_assert!(Self::new(factors.clone()).is_ok());
        Self(factors)
    }

    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// `⟨a_mode⟩`.
    pub fn annihilate(mode: u32) -> Self {
        Self(vec![OperatorSymbol::annihilate(mode)])
    }

    /// `⟨a†_mode⟩`.
    pub fn create(mode: u32) -> Self {
        Self(vec![OperatorSymbol::create(mode)])
    }

    /// Interprets a canonical expression holding exactly one unit-coefficient term.
    pub fn from_expr(expr: &OperatorExpr) -> Result<Self, KeyError> {
        let expr = expr.canonicalize();
        match expr.terms() {
            [t] if t.coeff.is_one() => Ok(Self(t.factors.clone())),
            _ => Err(KeyError::NotMonomial(expr.to_string())),
        }
    }

    pub fn factors(&self) -> &[OperatorSymbol] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn modes(&self) -> Vec<u32> {
        let mut m: Vec<u32> = self.0.iter().map(|s| s.mode).collect();
        m.dedup();
        m
    }

    /// Largest mode index referenced, if any.
    pub fn max_mode(&self) -> Option<u32> {
        self.0.last().map(|s| s.mode)
    }

    /// `(create, annihilate)` powers for one mode.
    pub fn powers(&self, mode: u32) -> (u32, u32) {
        self.0.iter().filter(|s| s.mode == mode).fold((0, 0), |(c, a), s| match s.kind {
            SymbolKind::Create => (c + 1, a),
            _ => (c, a + 1),
        })
    }

    /// Key of the adjoint monomial. For normal-ordered monomials this swaps
    /// creation and annihilation powers mode by mode, which is again normal ordered.
    pub fn dagger(&self) -> Self {
        let mut out = Vec::with_capacity(self.0.len());
        for mode in self.modes() {
            let (c, a) = self.powers(mode);
            out.extend(std::iter::repeat_n(OperatorSymbol::create(mode), a as usize));
            out.extend(std::iter::repeat_n(OperatorSymbol::annihilate(mode), c as usize));
        }
        Self(out)
    }

    pub fn to_expr(&self) -> OperatorExpr {
        if self.0.is_empty() {
            OperatorExpr::identity()
        } else {
            OperatorExpr::monomial(self.0.clone())
        }
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_factors(f, &self.0)
    }
}

impl FromStr for MomentKey {
    type Err = KeyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MomentKey::from_expr(&parse_expr(s)?)
    }
}
