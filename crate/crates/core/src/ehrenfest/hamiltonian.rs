use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::opalg::{Coefficient, OperatorExpr, OperatorSymbol, Term};

/// Scalar time dependence attached to a drive term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant,
    Sin {
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Cos {
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TimeFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant => 1.0,
            TimeFunction::Sin { frequency, phase } => (frequency * t + phase).sin(),
            TimeFunction::Cos { frequency, phase } => (frequency * t + phase).cos(),
        }
    }
}

impl fmt::Display for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, frequency, phase) = match *self {
            TimeFunction::Constant => return f.write_str("1"),
            TimeFunction::Sin { frequency, phase } => ("sin", frequency, phase),
            TimeFunction::Cos { frequency, phase } => ("cos", frequency, phase),
        };
        if phase == 0.0 {
            write!(f, "{name}({frequency}*t)")
        } else {
            write!(f, "{name}({frequency}*t + {phase})")
        }
    }
}

/// `γ_ij q_i q_j` with `i ≠ j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// An additional Hamiltonian term, optionally multiplied by a function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtraTerm {
    pub expr: OperatorExpr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeFunction>,
}

/// Coupled oscillators `Σ ω_i (n_i + ½) + Σ_{i<j} γ_ij q_i q_j` plus extra terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub mode_count: usize,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    #[serde(default)]
    pub extra_terms: Vec<ExtraTerm>,
}

impl HamiltonianSpec {
    /// Uncoupled oscillators.
    pub fn uncoupled(frequencies: Vec<f64>) -> Self {
        Self { mode_count: frequencies.len(), frequencies, couplings: Vec::new(), extra_terms: Vec::new() }
    }

    pub fn with_coupling(mut self, i: usize, j: usize, strength: f64) -> Self {
        self.couplings.push(Coupling { i, j, strength });
        self
    }

    pub fn with_term(mut self, expr: OperatorExpr, time: Option<TimeFunction>) -> Self {
        self.extra_terms.push(ExtraTerm { expr, time });
        self
    }

    /// Couplings normalized to `i < j`, validated for range and symmetry.
    pub fn coupling_map(&self) -> Result<BTreeMap<(usize, usize), f64>, HamiltonianError> {
        let mut map = BTreeMap::new();
        for c in &self.couplings {
            if c.i >= self.mode_count || c.j >= self.mode_count {
                return Err(HamiltonianError::CouplingOutOfRange { i: c.i, j: c.j, mode_count: self.mode_count });
            }
            if c.i == c.j {
                return Err(HamiltonianError::SelfCoupling(c.i));
            }
            if !c.strength.is_finite() {
                return Err(HamiltonianError::NonFinite("coupling strength"));
            }
            let key = (c.i.min(c.j), c.i.max(c.j));
            match map.insert(key, c.strength) {
                Some(prev) if prev != c.strength => {
                    return Err(HamiltonianError::NonSymmetric { i: key.0, j: key.1, first: prev, second: c.strength })
                }
                _ => {}
            }
        }
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), HamiltonianError> {
        if self.frequencies.len() != self.mode_count {
            return Err(HamiltonianError::FrequencyCount { expected: self.mode_count, found: self.frequencies.len() });
        }
        if let Some((mode, &w)) = self.frequencies.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(HamiltonianError::BadFrequency { mode, value: w });
        }
        self.coupling_map()?;
        for t in &self.extra_terms {
            if let Some(&m) = t.expr.modes().last() {
                if m as usize >= self.mode_count {
                    return Err(HamiltonianError::TermOutOfRange { mode: m as usize, mode_count: self.mode_count });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HamiltonianError {
    #[error("expected {expected} frequencies, found {found}")]
    FrequencyCount { expected: usize, found: usize },
    #[error("frequency of mode {mode} must be positive and finite, got {value}")]
    BadFrequency { mode: usize, value: f64 },
    #[error("coupling ({i}, {j}) out of range for {mode_count} modes")]
    CouplingOutOfRange { i: usize, j: usize, mode_count: usize },
    #[error("self-coupling on mode {0} is not allowed")]
    SelfCoupling(usize),
    #[error("coupling ({i}, {j}) given twice with different strengths {first} and {second}")]
    NonSymmetric { i: usize, j: usize, first: f64, second: f64 },
    #[error("extra term references mode {mode} but there are only {mode_count} modes")]
    TermOutOfRange { mode: usize, mode_count: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

/// A drive operator multiplied by a scalar function of time.
#[derive(Clone, Debug, PartialEq)]
pub struct Drive {
    pub operator: OperatorExpr,
    pub time: TimeFunction,
}

/// Canonical Hamiltonian: static part plus time-tagged drives carried alongside.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Hamiltonian {
    pub operator: OperatorExpr,
    pub drives: Vec<Drive>,
}

impl Hamiltonian {
    pub fn is_time_independent(&self) -> bool {
        self.drives.is_empty()
    }

    /// Highest operator degree across the static part and all drives.
    pub fn degree(&self) -> usize {
        self.drives.iter().map(|d| d.operator.degree()).chain([self.operator.degree()]).max().unwrap_or(0)
    }
}

impl From<OperatorExpr> for Hamiltonian {
    fn from(operator: OperatorExpr) -> Self {
        Self { operator: operator.canonicalize(), drives: Vec::new() }
    }
}

fn exact(x: f64) -> Coefficient {
    Coefficient::from_f64(x).expect("validated finite")
}

/// Expands the spec into canonical ladder form.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<Hamiltonian, HamiltonianError> {
    spec.validate()?;
    let half = Coefficient::from_ratio(1, 2);
    let mut raw = Vec::with_capacity(2 * spec.mode_count + spec.couplings.len());
    for (mode, &w) in spec.frequencies.iter().enumerate() {
        let w = exact(w);
        raw.push(Term::new(w.clone(), vec![OperatorSymbol::number(mode as u32)]));
        raw.push(Term::new(&w * &half, Vec::new()));
    }
    for ((i, j), g) in spec.coupling_map()? {
        raw.push(Term::new(exact(g), vec![OperatorSymbol::position(i as u32), OperatorSymbol::position(j as u32)]));
    }
    let mut operator = OperatorExpr::from_terms(raw).canonicalize();
    let mut drives = Vec::new();
    for t in &spec.extra_terms {
        let expr = t.expr.canonicalize();
        match t.time {
            None => operator = &operator + &expr,
            Some(time) => drives.push(Drive { operator: expr, time }),
        }
    }
    Ok(Hamiltonian { operator, drives })
}
