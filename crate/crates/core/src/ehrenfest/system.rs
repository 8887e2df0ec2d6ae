use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use super::hamiltonian::TimeFunction;
use super::key::MomentKey;
use crate::opalg::OperatorExpr;

/// `coeff · ⟨variables[var]⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearEntry {
    pub var: usize,
    pub coeff: Complex64,
}

/// `coeff · f(t) · ⟨variables[var]⟩`, or `coeff · f(t)` when `var` is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForcingEntry {
    pub var: Option<usize>,
    pub coeff: Complex64,
    pub time: TimeFunction,
}

/// Right-hand side of one tracked expectation value.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Rhs {
    pub linear: Vec<LinearEntry>,
    pub constant: Complex64,
    pub driven: Vec<ForcingEntry>,
}

impl Rhs {
    pub fn is_zero(&self) -> bool {
        self.linear.is_empty() && self.constant == Complex64::new(0.0, 0.0) && self.driven.is_empty()
    }
}

/// First-order linear ODEs `d⟨key⟩/dt = Σ c_j ⟨key_j⟩ + forcing` for expectation values.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    variables: Vec<MomentKey>,
    rhs: Vec<Rhs>,
    truncated: bool,
    truncation_order: Option<usize>,
    index: HashMap<MomentKey, usize>,
}

/// A tracked observable written as `constant + Σ weight · ⟨variable⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearObservable {
    pub constant: Complex64,
    pub weights: Vec<(usize, Complex64)>,
}

impl LinearObservable {
    pub fn eval(&self, values: &[Complex64]) -> Complex64 {
        self.weights.iter().fold(self.constant, |acc, &(k, w)| acc + w * values[k])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("monomial <{0}> is not tracked by this system")]
pub struct UntrackedMoment(pub String);

impl OdeSystem {
    pub(crate) fn new(
        variables: Vec<MomentKey>,
        rhs: Vec<Rhs>,
        truncated: bool,
        truncation_order: Option<usize>,
    ) -> Self {
        assert_eq!(variables.len(), rhs.len());
        let index = variables.iter().cloned().enumerate().map(|(k, v)| (v, k)).collect();
        let sys = Self { variables, rhs, truncated, truncation_order, index };
        debug_assert!(sys.indices_in_range());
        sys
    }

    fn indices_in_range(&self) -> bool {
        let n = self.variables.len();
        self.rhs
            .iter()
            .all(|r| r.linear.iter().all(|e| e.var < n) && r.driven.iter().all(|e| e.var.is_none_or(|v| v < n)))
    }

    pub fn variables(&self) -> &[MomentKey] {
        &self.variables
    }

    pub fn rhs(&self) -> &[Rhs] {
        &self.rhs
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// True when some moments above the truncation order were dropped.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn truncation_order(&self) -> Option<usize> {
        self.truncation_order
    }

    pub fn index_of(&self, key: &MomentKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// No explicit time dependence anywhere.
    pub fn is_autonomous(&self) -> bool {
        self.rhs.iter().all(|r| r.driven.is_empty())
    }

    /// Writes `expr` in terms of tracked variables; its canonical monomials must all be tracked.
    pub fn observable(&self, expr: &OperatorExpr) -> Result<LinearObservable, UntrackedMoment> {
        let expr = expr.canonicalize();
        let mut constant = Complex64::new(0.0, 0.0);
        let mut weights = Vec::new();
        for t in expr.terms() {
            let c = t.coeff.to_c64();
            if t.factors.is_empty() {
                constant += c;
                continue;
            }
            let key = MomentKey::new_unchecked(t.factors.clone());
            let k = self.index_of(&key).ok_or_else(|| UntrackedMoment(key.to_string()))?;
            weights.push((k, c));
        }
        Ok(LinearObservable { constant, weights })
    }

    /// Evaluates all derivatives at time `t`.
    pub fn eval_into(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        for (out, r) in dy.iter_mut().zip(&self.rhs) {
            let mut acc = r.constant;
            for e in &r.linear {
                acc += e.coeff * y[e.var];
            }
            for e in &r.driven {
                let base = e.var.map_or(Complex64::new(1.0, 0.0), |v| y[v]);
                acc += e.coeff * e.time.eval(t) * base;
            }
            *out = acc;
        }
    }

    /// Dense generator `A` of `dy/dt = A y + b` for autonomous systems, with
    /// the constant forcing `b`. `None` when there are explicit drives.
    pub fn generator(&self) -> Option<(Vec<Vec<Complex64>>, Vec<Complex64>)> {
        if !self.is_autonomous() {
            return None;
        }
        let n = self.len();
        let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for (row, r) in self.rhs.iter().enumerate() {
            for e in &r.linear {
                a[row][e.var] += e.coeff;
            }
            b[row] = r.constant;
        }
        Some((a, b))
    }

    /// Re-expresses a first-moment system in position/momentum quadratures,
    /// `d<q[i]>/dt = ...`, one line per quadrature. Returns `None` unless every
    /// variable is a first moment and both `a_i` and `a_i†` are tracked for each mode.
    pub fn quadrature_listing(&self) -> Option<String> {
        if self.variables.iter().any(|k| k.degree() != 1) {
            return None;
        }
        let mut modes: Vec<u32> = self.variables.iter().map(|k| k.factors()[0].mode).collect();
        modes.sort_unstable();
        modes.dedup();
        let pairs: Vec<(u32, usize, usize)> = modes
            .iter()
            .map(|&m| Some((m, self.index_of(&MomentKey::annihilate(m))?, self.index_of(&MomentKey::create(m))?)))
            .collect::<Option<_>>()?;
        let slot: HashMap<usize, (usize, bool)> =
            pairs.iter().enumerate().flat_map(|(s, &(_, ia, ic))| [(ia, (s, false)), (ic, (s, true))]).collect();

        let half = Complex64::new(0.5, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = String::new();
        for &(mode, ia, ic) in &pairs {
            for quad in [Quadrature::Q, Quadrature::P] {
                // d/dt of q = (a + a†)/√2 or p = -i(a - a†)/√2, with variables re-expanded
                // through a = (q + ip)/√2, a† = (q - ip)/√2.
                let (wa, wc) = match quad {
                    Quadrature::Q => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
                    Quadrature::P => (-i, i),
                };
                let mut q_coeffs = vec![Complex64::new(0.0, 0.0); pairs.len()];
                let mut p_coeffs = vec![Complex64::new(0.0, 0.0); pairs.len()];
                for (src, w) in [(ia, wa), (ic, wc)] {
                    for e in &self.rhs[src].linear {
                        let (s, is_create) = slot[&e.var];
                        let c = w * e.coeff * half;
                        q_coeffs[s] += c;
                        p_coeffs[s] += if is_create { -i * c } else { i * c };
                    }
                }
                let constant = (wa * self.rhs[ia].constant + wc * self.rhs[ic].constant) * inv_sqrt2;
                let mut terms: Vec<(Complex64, String)> = Vec::new();
                for (s, &(m, _, _)) in pairs.iter().enumerate() {
                    terms.push((q_coeffs[s], format!("<q[{m}]>")));
                    terms.push((p_coeffs[s], format!("<p[{m}]>")));
                }
                let mut driven: Vec<(Complex64, String)> = Vec::new();
                for (src, w) in [(ia, wa), (ic, wc)] {
                    for e in &self.rhs[src].driven {
                        match e.var {
                            None => driven.push((w * e.coeff * inv_sqrt2, format!("{}", e.time))),
                            Some(v) => {
                                let (s, is_create) = slot[&v];
                                let m = pairs[s].0;
                                let c = w * e.coeff * half;
                                driven.push((c, format!("<q[{m}]>*{}", e.time)));
                                let pc = if is_create { -i * c } else { i * c };
                                driven.push((pc, format!("<p[{m}]>*{}", e.time)));
                            }
                        }
                    }
                }
                terms.extend(driven);
                if constant.norm() > 0.0 {
                    terms.push((constant, String::new()));
                }
                let name = match quad {
                    Quadrature::Q => "q",
                    Quadrature::P => "p",
                };
                let _ = write!(out, "d<{name}[{mode}]>/dt = ");
                write_sum(&mut out, &terms);
                out.push('\n');
            }
        }
        Some(out)
    }
}

#[derive(Clone, Copy)]
enum Quadrature {
    Q,
    P,
}

/// Rounds to 12 significant digits so float noise stays out of listings.
fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Formats a complex coefficient compactly: `2`, `-0.5i`, `(1-2i)`.
pub fn format_complex(z: Complex64) -> String {
    let (re, im) = (tidy(z.re), tidy(z.im));
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        (false, false) => {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!("({}{}{}i)", re, sign, im.abs())
        }
    }
}

/// Writes `c1*x1 + c2*x2 - ...`, merging equal labels and dropping
/// negligible coefficients and unit factors.
fn write_sum(out: &mut String, terms: &[(Complex64, String)]) {
    let mut merged: Vec<(Complex64, &str)> = Vec::new();
    for (c, name) in terms {
        match merged.iter_mut().find(|(_, n)| *n == name.as_str()) {
            Some((acc, _)) => *acc += c,
            None => merged.push((*c, name)),
        }
    }
    let scale = merged.iter().map(|(c, _)| c.norm()).fold(0.0, f64::max);
    let mut first = true;
    for (c, name) in merged {
        if c.norm() <= 1e-14 * scale {
            continue;
        }
        let clean = |x: f64| if x.abs() <= 1e-14 * scale { 0.0 } else { tidy(x) };
        let c = Complex64::new(clean(c.re), clean(c.im));
        let single = c.re == 0.0 || c.im == 0.0;
        let negative = single && (c.re < 0.0 || c.im < 0.0);
        let magnitude = if negative { -c } else { c };
        match (first, negative) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        first = false;
        let unit = magnitude == Complex64::new(1.0, 0.0);
        match (name.is_empty(), unit) {
            (true, _) => out.push_str(&format_complex(magnitude)),
            (false, true) => out.push_str(name),
            (false, false) => {
                out.push_str(&format_complex(magnitude));
                out.push('*');
                out.push_str(name);
            }
        }
    }
    if first {
        out.push('0');
    }
}

/// `d<key>/dt = Σ c_j <key_j> [+ c f(t)]`, one line per variable in index order.
impl fmt::Display for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, r) in self.variables.iter().zip(&self.rhs) {
            let mut terms: Vec<(Complex64, String)> =
                r.linear.iter().map(|e| (e.coeff, format!("<{}>", self.variables[e.var]))).collect();
            for e in &r.driven {
                let name = match e.var {
                    Some(v) => format!("<{}>*{}", self.variables[v], e.time),
                    None => format!("{}", e.time),
                };
                terms.push((e.coeff, name));
            }
            if r.constant.norm() > 0.0 {
                terms.push((r.constant, String::new()));
            }
            let mut line = String::new();
            write_sum(&mut line, &terms);
            writeln!(f, "d<{key}>/dt = {line}")?;
        }
        Ok(())
    }
}
