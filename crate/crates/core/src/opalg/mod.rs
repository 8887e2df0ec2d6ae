//! Non-commutative polynomials in multi-mode bosonic operators.
//!
//! Units are dimensionless (ħ = m = 1) and the quadratures follow
//! `q = (a + a†)/√2`, `p = −i(a − a†)/√2`, so `[q, p] = i`.

mod coefficient;
mod expr;
mod symbol;
mod text;

pub use coefficient::{Coefficient, Surd};
pub use expr::{commutator, multiply, AlgebraError, OperatorExpr, Term};
pub use symbol::{OperatorSymbol, SymbolKind};
pub use text::{parse_expr, write_factors, ParseError};
