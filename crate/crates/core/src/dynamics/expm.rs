use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::integrator::{IntegrateError, TimeGrid};
use super::series::TimeSeries;
use crate::ehrenfest::OdeSystem;

/// `exp(m)` by Taylor series with scaling and squaring.
pub fn expm(m: &Array2<Complex64>) -> Array2<Complex64> {
    let n = m.nrows();
    let norm1 = (0..n).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m / Complex64::new(2f64.powi(squarings), 0.0);
    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=30 {
        term = term.dot(&scaled) / Complex64::new(k as f64, 0.0);
        result = result + &term;
        let size = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Exact propagation of an autonomous system `dy/dt = A y + b` by repeated
/// application of `exp(M dt)` on the augmented state `(y, 1)`.
pub fn integrate_expm(sys: &OdeSystem, y0: &[Complex64], grid: &TimeGrid) -> Result<TimeSeries, IntegrateError> {
    grid.validate()?;
    let n = sys.len();
    if y0.len() != n {
        return Err(IntegrateError::DimensionMismatch { expected: n, found: y0.len() });
    }
    let (a, b) = sys.generator().ok_or(IntegrateError::NotAutonomous)?;
    let mut m = Array2::<Complex64>::zeros((n + 1, n + 1));
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[[i, j]] = v * grid.dt;
        }
        m[[i, n]] = b[i] * grid.dt;
    }
    let step = expm(&m);
    let mut state: Array1<Complex64> = y0.iter().copied().chain([Complex64::new(1.0, 0.0)]).collect();
    let mut rows = Vec::with_capacity(grid.count);
    rows.push(y0.to_vec());
    for _ in 1..grid.count {
        state = step.dot(&state);
        rows.push(state.iter().take(n).copied().collect());
    }
    Ok(TimeSeries::from_rows(*grid, rows, sys.variables().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        // exp([[0, -θ], [θ, 0]]) is a rotation by θ
        let th = 2.5;
        let m = ndarray::arr2(&[[0.0, -th], [th, 0.0]]).mapv(|x| Complex64::new(x, 0.0));
        let e = expm(&m);
        assert!((e[[0, 0]].re - th.cos()).abs() < 1e-14);
        assert!((e[[1, 0]].re - th.sin()).abs() < 1e-14);
    }
}
