//! One configured run: derive, integrate, export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ehrenfest_core::bath::{build_star, BathSpec};
use ehrenfest_core::dynamics::{dominant_frequency_of, integrate, TimeGrid, TimeSeries};
use ehrenfest_core::ehrenfest::{
    bch_series, build_hamiltonian, derive_closure, evaluate_series, first_moment_seeds, Hamiltonian, HamiltonianSpec,
    MomentKey, OdeSystem,
};
use ehrenfest_core::opalg::{OperatorExpr, OperatorSymbol};
use ehrenfest_core::oracle::{oracle_trajectories, DenseState, Schrodinger, EDGE_MARGIN, MAX_MODES};
use ehrenfest_core::states::InitialStateSpec;
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::RunError;

/// Largest deviation accepted between closure and oracle trajectories.
pub const ORACLE_TOL: f64 = 1e-4;
/// Agreement level used to report how long a truncated BCH series stays valid.
pub const BCH_TOL: f64 = 1e-6;
/// Oracle state-vector size the Fock truncation is chosen for.
const ORACLE_DIM: usize = 4096;
const ORACLE_MAX_LEVELS: usize = 40;
const ORACLE_MODE_LIMIT: usize = 3;
const EDGE_WEIGHT_TOL: f64 = 1e-8;

/// Output locations after resolving against the output directory.
pub fn trajectory_path(config: &RunConfig, out_dir: &Path) -> PathBuf {
    out_dir.join(config.outputs.trajectory_csv.as_deref().unwrap_or(Path::new("trajectory.csv")))
}

pub fn peaks_path(config: &RunConfig, out_dir: &Path) -> Option<PathBuf> {
    config.outputs.peaks_csv.as_deref().map(|p| out_dir.join(p))
}

/// Runs `config`, writing CSVs under `out_dir`, and returns the text report.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<String, RunError> {
    let spec = config.hamiltonian_spec()?;
    let h = build_hamiltonian(&spec).map_err(|e| RunError::Config(e.to_string()))?;
    let sys = derive_closure(&h, &first_moment_seeds(spec.mode_count), config.outputs.max_order)?;
    let mut report = String::new();
    if config.outputs.derive_only {
        report.push_str(&sys.quadrature_listing().unwrap_or_else(|| sys.to_string()));
        return Ok(report);
    }
    let state = config.state_spec(spec.mode_count)?;
    let y0 = state.initial_vector(&sys).map_err(|e| RunError::Config(format!("initial_state: {e}")))?;
    let grid = TimeGrid::spanning(0.0, config.grid.t_end, config.grid.samples);
    let series = integrate(&sys, &y0, &grid).map_err(|e| RunError::Other(format!("integration failed: {e}")))?;
    let _ = writeln!(
        report,
        "{} variables{}, {} samples to t = {}",
        sys.len(),
        if sys.truncated() { " (truncated)" } else { "" },
        grid.count,
        grid.end()
    );

    let path = trajectory_path(config, out_dir);
    write_trajectory(&path, &series)?;
    let _ = writeln!(report, "trajectory: {}", path.display());

    if let Some(path) = peaks_path(config, out_dir) {
        write_peaks(&path, &series, spec.frequencies[0])?;
        let _ = writeln!(report, "peaks: {}", path.display());
    }
    if let Some(order) = config.outputs.bch_order {
        report.push_str(&bch_report(&h, &sys, &state, &series, order)?);
    }
    if config.outputs.oracle_check {
        report.push_str(&oracle_report(&spec, &h, &sys, &state, &series)?);
    }
    Ok(report)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Other(format!("cannot create {}: {e}", dir.display())))?;
    }
    csv::Writer::from_path(path).map_err(|e| RunError::Other(format!("cannot write {}: {e}", path.display())))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |e| RunError::Other(format!("cannot write {}: {e}", path.display()))
}

/// `t, re<key>, im<key>, ...` with shortest round-trip floats.
pub fn write_trajectory(path: &Path, series: &TimeSeries) -> Result<(), RunError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    for key in series.keys() {
        header.push(format!("re<{key}>"));
        header.push(format!("im<{key}>"));
    }
    w.write_record(&header).map_err(csv_error(path))?;
    for (t, row) in series.times().iter().zip(series.values().rows()) {
        let mut record = vec![format!("{t:?}")];
        for z in row {
            record.push(format!("{:?}", z.re));
            record.push(format!("{:?}", z.im));
        }
        w.write_record(&record).map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| RunError::Other(format!("cannot write {}: {e}", path.display())))
}

/// Dominant frequency of every mode's `⟨a⟩` relative to the system frequency.
pub fn write_peaks(path: &Path, series: &TimeSeries, omega0: f64) -> Result<(), RunError> {
    let modes = series.keys().iter().filter_map(MomentKey::max_mode).max().map_or(0, |m| m as usize + 1);
    let mut w = csv_writer(path)?;
    w.write_record(["mode", "dominant_frequency_over_omega0"]).map_err(csv_error(path))?;
    for mode in 0..modes as u32 {
        let f = dominant_frequency_of(series, &MomentKey::annihilate(mode))
            .map_err(|e| RunError::Other(format!("mode {mode}: {e}")))?;
        w.write_record([mode.to_string(), format!("{:?}", f / omega0)]).map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| RunError::Other(format!("cannot write {}: {e}", path.display())))
}

fn bch_report(
    h: &Hamiltonian,
    sys: &OdeSystem,
    state: &InitialStateSpec,
    series: &TimeSeries,
    order: usize,
) -> Result<String, RunError> {
    if !h.is_time_independent() {
        return Err(RunError::Config("the BCH series needs a time-independent Hamiltonian".into()));
    }
    let q0 = OperatorExpr::from_symbol(OperatorSymbol::position(0)).canonicalize();
    let initial: Vec<Complex64> = bch_series(&q0, &h.operator, order)
        .iter()
        .map(|c| state.expectation_expr(c))
        .collect::<Result<_, _>>()
        .map_err(|e| RunError::Other(format!("BCH initial values: {e}")))?;
    let obs = sys.observable(&q0).map_err(|e| RunError::Other(format!("BCH comparison: {e}")))?;
    let trace = series.trace(&obs);
    let times = series.times();
    let mut horizon = 0.0;
    let mut worst = 0.0f64;
    for (&t, v) in times.iter().zip(&trace) {
        let gap = (evaluate_series(&initial, t) - v).norm();
        if gap > BCH_TOL {
            break;
        }
        worst = worst.max(gap);
        horizon = t;
    }
    Ok(format!(
        "BCH order {order} for <q[0]>: within {BCH_TOL:e} of the ODE up to t = {horizon} (max deviation {worst:.3e})\n"
    ))
}

/// Small instance checked when the configured system is too large for the oracle.
fn reference_instance() -> Result<(HamiltonianSpec, InitialStateSpec, TimeGrid), RunError> {
    let spec = build_star(&BathSpec::lorentzian(2, 0.05, 1.0)).map_err(|e| RunError::Other(e.to_string()))?;
    let state = InitialStateSpec::EntangledPairs { xi: 1.0, zeta: 0.5, delta: 0.5, bath_modes: 2 };
    Ok((spec, state, TimeGrid::spanning(0.0, 50.0, 501)))
}

fn oracle_report(
    spec: &HamiltonianSpec,
    h: &Hamiltonian,
    sys: &OdeSystem,
    state: &InitialStateSpec,
    series: &TimeSeries,
) -> Result<String, RunError> {
    let oracle = |e: String| RunError::Oracle(e);
    let (label, h, sys, state, series) = if spec.mode_count <= ORACLE_MODE_LIMIT.min(MAX_MODES) {
        ("configured system".to_string(), h.clone(), sys.clone(), state.clone(), series.clone())
    } else {
        let (spec, state, grid) = reference_instance()?;
        let h = build_hamiltonian(&spec).map_err(|e| RunError::Other(e.to_string()))?;
        let sys = derive_closure(&h, &first_moment_seeds(spec.mode_count), None)?;
        let y0 = state.initial_vector(&sys).map_err(|e| RunError::Other(e.to_string()))?;
        let series = integrate(&sys, &y0, &grid).map_err(|e| RunError::Other(e.to_string()))?;
        ("reference 3-mode star (configured system exceeds 3 modes)".to_string(), h, sys, state, series)
    };
    let modes = state.mode_count() as f64;
    let levels = ((ORACLE_DIM as f64).powf(1.0 / modes).floor() as usize).min(ORACLE_MAX_LEVELS);
    let dense = DenseState::from_spec(&state, levels).map_err(|e| oracle(e.to_string()))?;
    let edge = dense.edge_weight(EDGE_MARGIN);
    if edge > EDGE_WEIGHT_TOL {
        return Err(oracle(format!("initial state puts weight {edge:e} near the Fock truncation edge")));
    }
    let schrodinger = Schrodinger::new(dense.space(), &h).map_err(|e| oracle(e.to_string()))?;
    let observables: Vec<OperatorExpr> = sys.variables().iter().map(MomentKey::to_expr).collect();
    let reference =
        oracle_trajectories(&dense, &schrodinger, &observables, series.grid()).map_err(|e| oracle(e.to_string()))?;
    let mut worst = 0.0f64;
    for (row, exact) in series.values().rows().into_iter().zip(&reference) {
        for (a, b) in row.iter().zip(exact) {
            worst = worst.max((a - b).norm());
        }
    }
    if worst > ORACLE_TOL {
        return Err(oracle(format!("{label}: max deviation {worst:e} exceeds {ORACLE_TOL:e}")));
    }
    Ok(format!("oracle check on {label}: max deviation {worst:.3e} (tolerance {ORACLE_TOL:e})\n"))
}
