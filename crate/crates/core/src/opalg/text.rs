//! Plain-text form of operator expressions.
//!
//! ```text
//! expr    := ['+'|'-'] product (('+'|'-') product)*
//! product := power (['*'] power)*
//! power   := atom ['^' INT]
//! atom    := INT ['/' INT] | 'i' | 'sqrt2' | SYMBOL '[' INT ']' | '(' expr ')'
//! SYMBOL  := 'ad' | 'a' | 'q' | 'p' | 'n'
//! ```
//!
//! Juxtaposition multiplies, so `-2i` and `2 ad[0] a[0]` parse. Parsing
//! always yields canonical output; printing a canonical expression and
//! parsing it back reproduces it exactly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::coefficient::Coefficient;
use super::expr::{OperatorExpr, Term};
use super::symbol::{OperatorSymbol, SymbolKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Slash,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Caret,
    I,
    Sqrt2,
    Symbol(OperatorSymbol),
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError { position, message: message.into() }
}

fn lex(input: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        let start = k;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                k += 1;
                continue;
            }
            b'/' => out.push((start, Token::Slash)),
            b'(' => out.push((start, Token::LParen)),
            b')' => out.push((start, Token::RParen)),
            b'+' => out.push((start, Token::Plus)),
            b'-' => out.push((start, Token::Minus)),
            b'*' => out.push((start, Token::Star)),
            b'^' => out.push((start, Token::Caret)),
            b'0'..=b'9' => {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                let n: BigInt = input[start..k].parse().map_err(|_| err(start, "bad integer"))?;
                out.push((start, Token::Int(n)));
                continue;
            }
            b'a'..=b'z' => {
                while k < bytes.len() && bytes[k].is_ascii_alphanumeric() {
                    k += 1;
                }
                let word = &input[start..k];
                let kind = match word {
                    "i" => {
                        out.push((start, Token::I));
                        continue;
                    }
                    "sqrt2" => {
                        out.push((start, Token::Sqrt2));
                        continue;
                    }
                    "ad" => SymbolKind::Create,
                    "a" => SymbolKind::Annihilate,
                    "q" => SymbolKind::Position,
                    "p" => SymbolKind::Momentum,
                    "n" => SymbolKind::Number,
                    other => return Err(err(start, format!("unknown identifier `{other}`"))),
                };
                if bytes.get(k) != Some(&b'[') {
                    return Err(err(k, format!("expected `[` after `{word}`")));
                }
                k += 1;
                let digits = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                let mode: u32 = input[digits..k].parse().map_err(|_| err(digits, "expected mode index"))?;
                if bytes.get(k) != Some(&b']') {
                    return Err(err(k, "expected `]`"));
                }
                k += 1;
                out.push((start, Token::Symbol(OperatorSymbol::new(kind, mode))));
                continue;
            }
            other => return Err(err(start, format!("unexpected character `{}`", other as char))),
        }
        k += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<OperatorExpr, ParseError> {
        let mut negate = false;
        match self.peek() {
            Some(Token::Plus) => {
                self.bump();
            }
            Some(Token::Minus) => {
                self.bump();
                negate = true;
            }
            _ => {}
        }
        let first = self.product()?;
        let mut acc = if negate { -first } else { first };
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    acc = &acc + &self.product()?;
                }
                Some(Token::Minus) => {
                    self.bump();
                    acc = &acc - &self.product()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Some(Token::Int(_) | Token::LParen | Token::I | Token::Sqrt2 | Token::Symbol(_)))
    }

    fn product(&mut self) -> Result<OperatorExpr, ParseError> {
        let mut acc = self.power()?;
        loop {
            if self.peek() == Some(&Token::Star) {
                self.bump();
                acc = acc.multiply(&self.power()?);
            } else if self.starts_atom() {
                acc = acc.multiply(&self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<OperatorExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = match self.bump() {
            Some(Token::Int(n)) => n.to_u32().ok_or_else(|| err(at, "exponent too large"))?,
            _ => return Err(err(at, "expected integer exponent")),
        };
        let mut acc = OperatorExpr::identity();
        for _ in 0..exponent {
            acc = acc.multiply(&base);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<OperatorExpr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Token::Int(n)) => {
                if self.peek() == Some(&Token::Slash) {
                    self.bump();
                    let at = self.offset();
                    let d = match self.bump() {
                        Some(Token::Int(d)) => d,
                        _ => return Err(err(at, "expected denominator")),
                    };
                    if d.is_zero() {
                        return Err(err(at, "zero denominator"));
                    }
                    Ok(OperatorExpr::scalar(Coefficient::from_rational(BigRational::new(n, d))))
                } else {
                    Ok(OperatorExpr::scalar(Coefficient::from_rational(BigRational::from_integer(n))))
                }
            }
            Some(Token::I) => Ok(OperatorExpr::scalar(Coefficient::i())),
            Some(Token::Sqrt2) => Ok(OperatorExpr::scalar(Coefficient::sqrt2())),
            Some(Token::Symbol(s)) => Ok(OperatorExpr::from_symbol(s).canonicalize()),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                let close = self.offset();
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(err(close, "expected `)`")),
                }
            }
            Some(t) => Err(err(at, format!("unexpected token {t:?}"))),
            None => Err(err(at, "unexpected end of input")),
        }
    }
}

/// Parses an expression and returns its canonical form.
pub fn parse_expr(input: &str) -> Result<OperatorExpr, ParseError> {
    let tokens = lex(input)?;
    if tokens.is_empty() {
        return Err(err(0, "empty expression"));
    }
    let mut p = Parser { tokens, pos: 0, end: input.len() };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(err(p.offset(), "trailing input"));
    }
    Ok(e)
}

impl FromStr for OperatorExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

impl serde::Serialize for OperatorExpr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for OperatorExpr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_expr(&text).map_err(serde::de::Error::custom)
    }
}

/// Writes a factor sequence as `ad[0]*a[1]`; the empty sequence prints `1`.
pub fn write_factors(f: &mut impl fmt::Write, factors: &[OperatorSymbol]) -> fmt::Result {
    if factors.is_empty() {
        return f.write_str("1");
    }
    for (k, s) in factors.iter().enumerate() {
        if k > 0 {
            f.write_str("*")?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

fn write_term(f: &mut fmt::Formatter<'_>, term: &Term, first: bool) -> fmt::Result {
    let negative = term.coeff.is_negative_atom();
    let magnitude = if negative { -&term.coeff } else { term.coeff.clone() };
    match (first, negative) {
        (true, true) => f.write_str("-")?,
        (true, false) => {}
        (false, true) => f.write_str(" - ")?,
        (false, false) => f.write_str(" + ")?,
    }
    if term.factors.is_empty() {
        return write!(f, "{magnitude}");
    }
    if !magnitude.is_one() {
        write!(f, "{magnitude}*")?;
    }
    write_factors(f, &term.factors)
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, t) in self.terms().iter().enumerate() {
            write_term(f, t, k == 0)?;
        }
        Ok(())
    }
}
