//! Trajectories of closed moment systems and their spectra.

mod expm;
mod integrator;
mod series;
mod spectrum;

pub use expm::{expm, integrate_expm};
pub use integrator::{solve, IntegrateError, IntegratorOptions, OdeRhs, TimeGrid};
pub use series::TimeSeries;
pub use spectrum::{
    dominant_frequency, dominant_frequency_of, hilbert_envelope, revival_time, SpectrumError, MIN_SAMPLES,
};

use num_complex::Complex64;

use crate::ehrenfest::OdeSystem;

/// Adaptive DOPRI5 at the default tolerances, sampled on `grid`.
pub fn integrate(sys: &OdeSystem, y0: &[Complex64], grid: &TimeGrid) -> Result<TimeSeries, IntegrateError> {
    integrate_with(sys, y0, grid, &IntegratorOptions::default())
}

pub fn integrate_with(
    sys: &OdeSystem,
    y0: &[Complex64],
    grid: &TimeGrid,
    opts: &IntegratorOptions,
) -> Result<TimeSeries, IntegrateError> {
    let rows = solve(sys, y0, grid, opts)?;
    Ok(TimeSeries::from_rows(*grid, rows, sys.variables().to_vec()))
}
