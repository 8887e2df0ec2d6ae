use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;

use super::integrator::TimeGrid;
use crate::ehrenfest::{LinearObservable, MomentKey};

/// Sampled trajectories: one row per grid point, one column per tracked moment.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Array2<Complex64>,
    keys: Vec<MomentKey>,
}

impl TimeSeries {
    /// Panics if the shape of `values` disagrees with `grid` and `keys`.
    pub fn new(grid: TimeGrid, values: Array2<Complex64>, keys: Vec<MomentKey>) -> Self {
        assert_eq!(values.dim(), (grid.count, keys.len()), "time series shape mismatch");
        Self { grid, values, keys }
    }

    pub(crate) fn from_rows(grid: TimeGrid, rows: Vec<Vec<Complex64>>, keys: Vec<MomentKey>) -> Self {
        let n = keys.len();
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((grid.count, n), flat).expect("rows match the grid");
        Self::new(grid, values, keys)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn keys(&self) -> &[MomentKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.grid.count
    }

    pub fn is_empty(&self) -> bool {
        self.grid.count == 0
    }

    pub fn column(&self, key: &MomentKey) -> Option<ArrayView1<'_, Complex64>> {
        let k = self.keys.iter().position(|x| x == key)?;
        Some(self.values.column(k))
    }

    /// Final row.
    pub fn last(&self) -> Vec<Complex64> {
        self.values.row(self.grid.count - 1).to_vec()
    }

    /// An observable evaluated at every grid point.
    pub fn trace(&self, obs: &LinearObservable) -> Vec<Complex64> {
        self.values.rows().into_iter().map(|row| obs.eval(row.as_slice().expect("row-major"))).collect()
    }

    /// `⟨q_mode⟩(t) = √2 Re⟨a_mode⟩(t)` when `a_mode` is tracked.
    pub fn position(&self, mode: u32) -> Option<Vec<f64>> {
        let col = self.column(&MomentKey::annihilate(mode))?;
        Some(col.iter().map(|z| std::f64::consts::SQRT_2 * z.re).collect())
    }
}
