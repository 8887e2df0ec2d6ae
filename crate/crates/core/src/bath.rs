//! Star-coupled system-plus-bath Hamiltonians built from a spectral density.

use serde::{Deserialize, Serialize};

use crate::ehrenfest::{Coupling, HamiltonianSpec};

/// Shape of `J(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    /// `2γω`, hard cutoff at `cutoff`.
    Ohmic { gamma: f64, cutoff: f64 },
    /// `weight · (width/π) / ((ω − center)² + width²)`; `width` is the half width at half maximum.
    Lorentzian { center: f64, width: f64, weight: f64 },
    /// Piecewise-linear interpolation through `(ω, J)` points, ascending in ω.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    #[serde(flatten)]
    pub family: DensityFamily,
    /// `[ω_min, ω_max]`; `None` means `[0, cutoff]` for Ohmic and the table's span for Tabulated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BathError {
    #[error("invalid support [{0}, {1}]: need 0 <= min < max, both finite")]
    InvalidSupport(f64, f64),
    #[error("a Lorentzian density needs an explicit support")]
    MissingSupport,
    #[error("invalid density parameter: {0}")]
    BadParameter(&'static str),
    #[error("tabulated density needs at least two points with strictly increasing ω")]
    BadTable,
    #[error("J(ω) is negative at ω = {0}")]
    Negative(f64),
    #[error("the spectral density integrates to zero over its support")]
    ZeroIntegral,
    #[error("the bath needs at least one mode")]
    NoModes,
}

impl SpectralDensity {
    /// Lorentzian at `omega0` with width `omega0/10` on `[0.2 ω₀, 1.8 ω₀]`.
    pub fn default_lorentzian(omega0: f64) -> Self {
        Self {
            family: DensityFamily::Lorentzian { center: omega0, width: omega0 / 10.0, weight: 1.0 },
            support: Some((0.2 * omega0, 1.8 * omega0)),
        }
    }

    pub fn ohmic(gamma: f64, cutoff: f64) -> Self {
        Self { family: DensityFamily::Ohmic { gamma, cutoff }, support: None }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Self {
        Self { family: DensityFamily::Tabulated { points }, support: None }
    }

    /// Reads a two-column `ω,J` table; blank lines and lines starting with `#` are skipped,
    /// as is a first line that does not parse as numbers.
    pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>, String> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).collect();
            let parsed = match cols.as_slice() {
                [w, j] => w.parse::<f64>().ok().zip(j.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(p) => points.push(p),
                None if points.is_empty() && lineno == 0 => continue,
                None => return Err(format!("line {}: expected two numeric columns", lineno + 1)),
            }
        }
        Ok(points)
    }

    /// Resolved `[ω_min, ω_max]`.
    pub fn bounds(&self) -> Result<(f64, f64), BathError> {
        let (lo, hi) = match (&self.family, self.support) {
            (_, Some(s)) => s,
            (DensityFamily::Ohmic { cutoff, .. }, None) => (0.0, *cutoff),
            (DensityFamily::Tabulated { points }, None) => match (points.first(), points.last()) {
                (Some(a), Some(b)) => (a.0, b.0),
                _ => return Err(BathError::BadTable),
            },
            (DensityFamily::Lorentzian { .. }, None) => return Err(BathError::MissingSupport),
        };
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(BathError::InvalidSupport(lo, hi));
        }
        Ok((lo, hi))
    }

    pub fn validate(&self) -> Result<(), BathError> {
        self.bounds()?;
        match &self.family {
            DensityFamily::Ohmic { gamma, cutoff } => {
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(BathError::BadParameter("ohmic gamma must be non-negative"));
                }
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return Err(BathError::BadParameter("ohmic cutoff must be positive"));
                }
            }
            DensityFamily::Lorentzian { center, width, weight } => {
                if !(center.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(BathError::BadParameter("lorentzian needs finite center and positive width"));
                }
                if !(weight.is_finite() && *weight >= 0.0) {
                    return Err(BathError::BadParameter("lorentzian weight must be non-negative"));
                }
            }
            DensityFamily::Tabulated { points } => {
                if points.len() < 2 || points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(BathError::BadTable);
                }
                if let Some(&(w, _)) = points.iter().find(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
                    return Err(BathError::Negative(w));
                }
            }
        }
        Ok(())
    }

    /// `J(ω)`, zero outside the support.
    pub fn eval(&self, w: f64) -> f64 {
        if let Ok((lo, hi)) = self.bounds() {
            if w < lo || w > hi {
                return 0.0;
            }
        }
        match &self.family {
            DensityFamily::Ohmic { gamma, cutoff } => {
                if w <= *cutoff {
                    2.0 * gamma * w
                } else {
                    0.0
                }
            }
            DensityFamily::Lorentzian { center, width, weight } => {
                weight * (width / std::f64::consts::PI) / ((w - center).powi(2) + width * width)
            }
            DensityFamily::Tabulated { points } => interpolate(points, w),
        }
    }

    /// `∫ J` over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        // Tabulated densities have kinks at the nodes; integrate piece by piece.
        if let DensityFamily::Tabulated { points } = &self.family {
            let mut cuts: Vec<f64> = vec![a];
            cuts.extend(points.iter().map(|p| p.0).filter(|&w| w > a && w < b));
            cuts.push(b);
            return cuts.windows(2).map(|c| simpson(&|w| self.eval(w), c[0], c[1], 1e-14)).sum();
        }
        simpson(&|w| self.eval(w), a, b, 1e-14)
    }

    /// `n` frequencies `ω_k = F⁻¹((k − ½)/n)`, ascending, where `F` is the
    /// normalized cumulative integral of `J` over the support.
    pub fn sample_frequencies(&self, n: usize) -> Result<Vec<f64>, BathError> {
        self.validate()?;
        if n == 0 {
            return Err(BathError::NoModes);
        }
        let (lo, hi) = self.bounds()?;
        let total = self.integral(lo, hi);
        if !(total > 0.0) {
            return Err(BathError::ZeroIntegral);
        }
        let mut out = Vec::with_capacity(n);
        // Each root is bracketed below by the previous one, so F is accumulated incrementally.
        let (mut base_w, mut base_f) = (lo, 0.0);
        for k in 1..=n {
            let target = (k as f64 - 0.5) / n as f64 * total;
            let (mut a, mut b) = (base_w, hi);
            while b - a > 1e-10 {
                let mid = 0.5 * (a + b);
                if base_f + self.integral(base_w, mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let w = 0.5 * (a + b);
            base_f += self.integral(base_w, w);
            base_w = w;
            out.push(w);
        }
        Ok(out)
    }
}

fn interpolate(points: &[(f64, f64)], w: f64) -> f64 {
    let k = points.partition_point(|p| p.0 <= w);
    match k {
        0 => 0.0,
        k if k == points.len() => {
            let last = points[k - 1];
            if w == last.0 {
                last.1
            } else {
                0.0
            }
        }
        k => {
            let (x0, y0) = points[k - 1];
            let (x1, y1) = points[k];
            y0 + (y1 - y0) * (w - x0) / (x1 - x0)
        }
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// A system oscillator at `system_frequency` coupled to `mode_count` bath modes, each with strength `coupling`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub density: SpectralDensity,
    pub mode_count: usize,
    pub coupling: f64,
    pub system_frequency: f64,
}

impl BathSpec {
    /// Default Lorentzian bath centred on the system frequency.
    pub fn lorentzian(mode_count: usize, coupling: f64, system_frequency: f64) -> Self {
        Self { density: SpectralDensity::default_lorentzian(system_frequency), mode_count, coupling, system_frequency }
    }
}

/// Mode 0 at `ω₀`, modes `1..=N` at the sampled bath frequencies, and `γ_0i = Γ`.
pub fn build_star(spec: &BathSpec) -> Result<HamiltonianSpec, BathError> {
    if !(spec.system_frequency.is_finite() && spec.system_frequency > 0.0) {
        return Err(BathError::BadParameter("system frequency must be positive"));
    }
    if !spec.coupling.is_finite() {
        return Err(BathError::BadParameter("coupling must be finite"));
    }
    let bath = spec.density.sample_frequencies(spec.mode_count)?;
    if let Some(&w) = bath.iter().find(|&&w| !(w > 0.0)) {
        return Err(BathError::InvalidSupport(w, w));
    }
    let mut frequencies = Vec::with_capacity(bath.len() + 1);
    frequencies.push(spec.system_frequency);
    frequencies.extend(bath);
    let couplings = (1..=spec.mode_count).map(|j| Coupling { i: 0, j, strength: spec.coupling }).collect();
    Ok(HamiltonianSpec { mode_count: spec.mode_count + 1, frequencies, couplings, extra_terms: Vec::new() })
}
