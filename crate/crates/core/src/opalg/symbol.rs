use std::fmt;

use serde::{Deserialize, Serialize};

/// Operator family of a single factor.
///
/// The declaration order is the tie-break order inside a mode, so ladder
/// symbols sort as `a†` before `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymbolKind {
    Create,
    Annihilate,
    Position,
    Momentum,
    Number,
    Identity,
}

impl SymbolKind {
    pub fn is_ladder(self) -> bool {
        matches!(self, SymbolKind::Create | SymbolKind::Annihilate)
    }

    /// Printer/parser spelling.
    pub fn token(self) -> &'static str {
        match self {
            SymbolKind::Create => "ad",
            SymbolKind::Annihilate => "a",
            SymbolKind::Position => "q",
            SymbolKind::Momentum => "p",
            SymbolKind::Number => "n",
            SymbolKind::Identity => "1",
        }
    }
}

/// A mode-indexed bosonic operator.
///
/// Field order matters: the derived ordering compares by mode first, which
/// is the canonical factor order across modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OperatorSymbol {
    pub mode: u32,
    pub kind: SymbolKind,
}

impl OperatorSymbol {
    pub fn new(kind: SymbolKind, mode: u32) -> Self {
        let mode = if kind == SymbolKind::Identity { 0 } else { mode };
        Self { mode, kind }
    }

    pub fn create(mode: u32) -> Self {
        Self::new(SymbolKind::Create, mode)
    }

    pub fn annihilate(mode: u32) -> Self {
        Self::new(SymbolKind::Annihilate, mode)
    }

    pub fn position(mode: u32) -> Self {
        Self::new(SymbolKind::Position, mode)
    }

    pub fn momentum(mode: u32) -> Self {
        Self::new(SymbolKind::Momentum, mode)
    }

    pub fn number(mode: u32) -> Self {
        Self::new(SymbolKind::Number, mode)
    }

    pub fn identity() -> Self {
        Self::new(SymbolKind::Identity, 0)
    }

    /// Hermitian conjugate of the single factor.
    pub fn dagger(self) -> Self {
        let kind = match self.kind {
            SymbolKind::Create => SymbolKind::Annihilate,
            SymbolKind::Annihilate => SymbolKind::Create,
            other => other,
        };
        Self { kind, ..self }
    }
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SymbolKind::Identity => f.write_str("1"),
            kind => write!(f, "{}[{}]", kind.token(), self.mode),
        }
    }
}
