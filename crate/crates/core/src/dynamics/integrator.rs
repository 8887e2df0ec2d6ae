use num_complex::Complex64;

use crate::ehrenfest::OdeSystem;

/// A first-order system `dy/dt = f(t, y)` over complex state vectors.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl OdeRhs for OdeSystem {
    fn dim(&self) -> usize {
        self.len()
    }

    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.eval_into(t, y, dy)
    }
}

/// Uniform output grid `t0 + k·dt`, `k = 0..count`. A negative `dt` integrates backwards.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, count: usize) -> Self {
        Self { t0, dt, count }
    }

    /// `count` points from `t0` to `t_end` inclusive.
    pub fn spanning(t0: f64, t_end: f64, count: usize) -> Self {
        let dt = if count > 1 { (t_end - t0) / (count - 1) as f64 } else { 0.0 };
        Self { t0, dt, count }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.count.saturating_sub(1))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.time(k)).collect()
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let ok = self.count >= 1 && self.t0.is_finite() && self.dt.is_finite() && (self.count == 1 || self.dt != 0.0);
        if ok {
            Ok(())
        } else {
            Err(IntegrateError::BadGrid(*self))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Fixed step size instead of adaptive control; the last step is shortened to hit the end.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, fixed_step: None, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error("initial vector has length {found}, system has {expected} variables")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid time grid {0:?}")]
    BadGrid(TimeGrid),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite value in variable {variable} at t = {t}")]
    NonFinite { t: f64, variable: usize },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("the matrix-exponential path needs a system without explicit time dependence")]
    NotAutonomous,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

struct Stages {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
    err: Vec<Complex64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self { k: std::array::from_fn(|_| z.clone()), tmp: z.clone(), y_new: z.clone(), err: z }
    }
}

fn combine(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// One DOPRI5 step from `(t, y)` with `k[0] = f(t, y)` already filled.
/// Leaves the new state in `s.y_new`, `f(t+h, y_new)` in `k[6]`, the error
/// estimate in `s.err`.
fn step<R: OdeRhs + ?Sized>(rhs: &R, t: f64, y: &[Complex64], h: f64, s: &mut Stages) {
    let [k1, k2, k3, k4, k5, k6, k7] = &mut s.k;
    combine(&mut s.tmp, y, h, &[(A21, k1.as_slice())]);
    rhs.eval(t + C2 * h, &s.tmp, k2);
    combine(&mut s.tmp, y, h, &[(A31, k1.as_slice()), (A32, k2.as_slice())]);
    rhs.eval(t + C3 * h, &s.tmp, k3);
    combine(&mut s.tmp, y, h, &[(A41, k1.as_slice()), (A42, k2.as_slice()), (A43, k3.as_slice())]);
    rhs.eval(t + C4 * h, &s.tmp, k4);
    combine(
        &mut s.tmp,
        y,
        h,
        &[(A51, k1.as_slice()), (A52, k2.as_slice()), (A53, k3.as_slice()), (A54, k4.as_slice())],
    );
    rhs.eval(t + C5 * h, &s.tmp, k5);
    combine(
        &mut s.tmp,
        y,
        h,
        &[(A61, k1.as_slice()), (A62, k2.as_slice()), (A63, k3.as_slice()), (A64, k4.as_slice()), (A65, k5.as_slice())],
    );
    rhs.eval(t + h, &s.tmp, k6);
    combine(
        &mut s.y_new,
        y,
        h,
        &[(A71, k1.as_slice()), (A73, k3.as_slice()), (A74, k4.as_slice()), (A75, k5.as_slice()), (A76, k6.as_slice())],
    );
    rhs.eval(t + h, &s.y_new, k7);
    for i in 0..y.len() {
        s.err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
    }
}

fn error_norm(y: &[Complex64], y_new: &[Complex64], err: &[Complex64], opts: &IntegratorOptions) -> f64 {
    let n = y.len().max(1);
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// Starting step from the scale of the solution and its first two derivatives.
fn initial_step<R: OdeRhs + ?Sized>(
    rhs: &R,
    t: f64,
    y: &[Complex64],
    f0: &[Complex64],
    dir: f64,
    opts: &IntegratorOptions,
) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.norm()).collect();
    let rms = |v: &[Complex64]| {
        let n = v.len().max(1) as f64;
        (v.iter().zip(&sc).map(|(x, s)| (x.norm() / s).powi(2)).sum::<f64>() / n).sqrt()
    };
    let (d0, d1) = (rms(y), rms(f0));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(1.0);
    let y1: Vec<Complex64> = y.iter().zip(f0).map(|(a, b)| a + b * (dir * h0)).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); y.len()];
    rhs.eval(t + dir * h0, &y1, &mut f1);
    let diff: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// Integrates from `y0` at `grid.t0`, sampling the dense output at every grid point.
/// Rows of the result are grid points, columns variables.
pub fn solve<R: OdeRhs + ?Sized>(
    rhs: &R,
    y0: &[Complex64],
    grid: &TimeGrid,
    opts: &IntegratorOptions,
) -> Result<Vec<Vec<Complex64>>, IntegrateError> {
    grid.validate()?;
    let n = rhs.dim();
    if y0.len() != n {
        return Err(IntegrateError::DimensionMismatch { expected: n, found: y0.len() });
    }
    if let Some(variable) = y0.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(IntegrateError::NonFinite { t: grid.t0, variable });
    }
    let mut out = Vec::with_capacity(grid.count);
    out.push(y0.to_vec());
    if grid.count == 1 {
        return Ok(out);
    }
    let dir = grid.dt.signum();
    let t_end = grid.end();
    let mut t = grid.t0;
    let mut y = y0.to_vec();
    let mut s = Stages::new(n);
    rhs.eval(t, &y, &mut s.k[0]);
    let mut h = match opts.fixed_step {
        Some(h) => h.abs(),
        None => initial_step(rhs, t, &y, &s.k[0], dir, opts),
    };
    let mut fac_old = 1e-4_f64;
    let mut next = 1;
    let mut steps = 0usize;
    let mut rcont = vec![vec![Complex64::new(0.0, 0.0); n]; 5];

    while next < grid.count {
        steps += 1;
        if steps > opts.max_steps {
            return Err(IntegrateError::TooManySteps(opts.max_steps));
        }
        let remaining = (t_end - t) * dir;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) && !last {
            return Err(IntegrateError::StepUnderflow { t, h });
        }
        let hs = dir * h;
        step(rhs, t, &y, hs, &mut s);
        if let Some(variable) = s.y_new.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            if opts.fixed_step.is_some() {
                return Err(IntegrateError::NonFinite { t: t + hs, variable });
            }
            h *= FAC_MIN;
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(IntegrateError::NonFinite { t: t + hs, variable });
            }
            continue;
        }
        let (accept, h_next) = match opts.fixed_step {
            Some(fixed) => (true, fixed.abs()),
            None => {
                let err = error_norm(&y, &s.y_new, &s.err, opts);
                let fac11 = err.powf(0.2 - BETA * 0.75);
                if err <= 1.0 {
                    let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                    fac_old = err.max(1e-4);
                    (true, h / fac)
                } else {
                    (false, h / (fac11 / SAFETY).min(1.0 / FAC_MIN))
                }
            }
        };
        if !accept {
            h = h_next;
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(IntegrateError::StepUnderflow { t, h });
            }
            continue;
        }

        // Dense output over [t, t + hs].
        let t_new = if last { t_end } else { t + hs };
        let k = &s.k;
        for i in 0..n {
            let ydiff = s.y_new[i] - y[i];
            let bspl = k[0][i] * hs - ydiff;
            rcont[0][i] = y[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - k[6][i] * hs - bspl;
            rcont[4][i] =
                (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * hs;
        }
        while next < grid.count {
            let tg = grid.time(next);
            let beyond = (tg - t_new) * dir > 0.0;
            if beyond && !(last && next == grid.count - 1) {
                break;
            }
            if next == grid.count - 1 && last {
                out.push(s.y_new.clone());
            } else {
                let theta = (tg - t) / hs;
                let theta1 = 1.0 - theta;
                out.push(
                    (0..n)
                        .map(|i| {
                            rcont[0][i]
                                + (rcont[1][i] + (rcont[2][i] + (rcont[3][i] + rcont[4][i] * theta1) * theta) * theta1)
                                    * theta
                        })
                        .collect(),
                );
            }
            next += 1;
        }
        t = t_new;
        std::mem::swap(&mut y, &mut s.y_new);
        let [k1, .., k7] = &mut s.k;
        std::mem::swap(k1, k7);
        h = h_next;
    }
    Ok(out)
}
