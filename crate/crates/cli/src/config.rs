//! JSON run configuration.

use std::path::{Path, PathBuf};

use ehrenfest_core::bath::{build_star, BathSpec, SpectralDensity};
use ehrenfest_core::ehrenfest::HamiltonianSpec;
use ehrenfest_core::states::InitialStateSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    pub initial_state: StateConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Star bath around a system oscillator. Without `density` or `density_table`
/// the default Lorentzian centred on the system frequency is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub mode_count: usize,
    pub coupling: f64,
    #[serde(default = "unit")]
    pub system_frequency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<SpectralDensity>,
    /// Two-column `ω, J(ω)` file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_table: Option<PathBuf>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    /// Coherent amplitudes `[re, im]` per mode; with `fill_vacuum` missing trailing modes are vacuum.
    ProductCoherent {
        alphas: Vec<Complex64>,
        #[serde(default)]
        fill_vacuum: bool,
    },
    FockSuperpositionProduct {
        amplitudes: Vec<Vec<Complex64>>,
    },
    /// `bath_modes` defaults to every mode but the system.
    EntangledPairs {
        xi: f64,
        zeta: f64,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bath_modes: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peaks_csv: Option<PathBuf>,
    #[serde(default)]
    pub derive_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bch_order: Option<usize>,
    #[serde(default)]
    pub oracle_check: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
}

impl RunConfig {
    /// Parses JSON, reporting the failing field path and line.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            RunError::Config(format!("at `{path}`: {inner}"))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(table) = config.bath.as_mut().and_then(|b| b.density_table.as_mut()) {
            if table.is_relative() {
                *table = path.parent().unwrap_or(Path::new(".")).join(&*table);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        match (&self.hamiltonian, &self.bath) {
            (Some(_), Some(_)) => return Err(RunError::Config("give either `hamiltonian` or `bath`, not both".into())),
            (None, None) => return Err(RunError::Config("missing `hamiltonian` or `bath`".into())),
            _ => {}
        }
        if let Some(b) = &self.bath {
            if b.density.is_some() && b.density_table.is_some() {
                return Err(RunError::Config("give either `bath.density` or `bath.density_table`, not both".into()));
            }
        }
        if self.grid.samples < 2 {
            return Err(RunError::Config(format!("grid.samples must be at least 2, got {}", self.grid.samples)));
        }
        if !(self.grid.t_end.is_finite() && self.grid.t_end > 0.0) {
            return Err(RunError::Config(format!("grid.t_end must be positive, got {}", self.grid.t_end)));
        }
        Ok(())
    }

    pub fn hamiltonian_spec(&self) -> Result<HamiltonianSpec, RunError> {
        if let Some(h) = &self.hamiltonian {
            h.validate().map_err(|e| RunError::Config(e.to_string()))?;
            return Ok(h.clone());
        }
        let b = self.bath.as_ref().ok_or_else(|| RunError::Config("missing `hamiltonian` or `bath`".into()))?;
        let density = match (&b.density, &b.density_table) {
            (Some(d), _) => d.clone(),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
                let points = SpectralDensity::parse_table(&text)
                    .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
                SpectralDensity::tabulated(points)
            }
            (None, None) => SpectralDensity::default_lorentzian(b.system_frequency),
        };
        let spec =
            BathSpec { density, mode_count: b.mode_count, coupling: b.coupling, system_frequency: b.system_frequency };
        build_star(&spec).map_err(|e| RunError::Config(format!("bath: {e}")))
    }

    pub fn state_spec(&self, mode_count: usize) -> Result<InitialStateSpec, RunError> {
        let spec = match &self.initial_state {
            StateConfig::ProductCoherent { alphas, fill_vacuum } => {
                let mut alphas = alphas.clone();
                if *fill_vacuum && alphas.len() < mode_count {
                    alphas.resize(mode_count, Complex64::new(0.0, 0.0));
                }
                InitialStateSpec::ProductCoherent { alphas }
            }
            StateConfig::FockSuperpositionProduct { amplitudes } => {
                InitialStateSpec::FockSuperpositionProduct { amplitudes: amplitudes.clone() }
            }
            &StateConfig::EntangledPairs { xi, zeta, delta, bath_modes } => InitialStateSpec::EntangledPairs {
                xi,
                zeta,
                delta,
                bath_modes: bath_modes.unwrap_or(mode_count.saturating_sub(1)),
            },
        };
        spec.validate().map_err(|e| RunError::Config(format!("initial_state: {e}")))?;
        if spec.mode_count() != mode_count {
            return Err(RunError::Config(format!(
                "initial_state covers {} modes but the Hamiltonian has {mode_count}",
                spec.mode_count()
            )));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STATE: &str = r#""initial_state": {"kind": "entangled_pairs", "xi": 1.0, "zeta": 0.5, "delta": 0.5}"#;
    const GRID: &str = r#""grid": {"t_end": 10.0, "samples": 11}"#;

    #[test]
    fn needs_exactly_one_hamiltonian_source() {
        let both = format!(
            r#"{{"hamiltonian": {{"mode_count": 3, "frequencies": [1, 1, 1]}}, "bath": {{"mode_count": 2, "coupling": 0.1}}, {STATE}, {GRID}}}"#
        );
        assert!(matches!(RunConfig::from_json(&both), Err(RunError::Config(_))));
        let neither = format!("{{{STATE}, {GRID}}}");
        assert!(matches!(RunConfig::from_json(&neither), Err(RunError::Config(_))));
    }

    #[test]
    fn entangled_state_covers_the_whole_bath() {
        let c = RunConfig::from_json(&format!(r#"{{"bath": {{"mode_count": 4, "coupling": 0.1}}, {STATE}, {GRID}}}"#))
            .unwrap();
        let spec = c.hamiltonian_spec().unwrap();
        assert_eq!(spec.mode_count, 5);
        assert_eq!(
            c.state_spec(5).unwrap(),
            InitialStateSpec::EntangledPairs { xi: 1.0, zeta: 0.5, delta: 0.5, bath_modes: 4 }
        );
    }

    #[test]
    fn rejects_short_grids_and_mismatched_states() {
        let short = format!(
            r#"{{"bath": {{"mode_count": 2, "coupling": 0.1}}, {STATE}, "grid": {{"t_end": 1.0, "samples": 1}}}}"#
        );
        assert!(RunConfig::from_json(&short).is_err());
        let c = RunConfig::from_json(&format!(
            r#"{{"bath": {{"mode_count": 2, "coupling": 0.1}}, "initial_state": {{"kind": "product_coherent", "alphas": [[1, 0]]}}, {GRID}}}"#
        ))
        .unwrap();
        assert!(c.state_spec(3).is_err());
    }

    #[test]
    fn reads_tabulated_density_next_to_the_config() {
        let dir = std::env::temp_dir().join(format!("ehrenfest-table-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("j.csv"), "0.5, 1.0\n1.5, 1.0\n").unwrap();
        std::fs::write(
            dir.join("run.json"),
            format!(r#"{{"bath": {{"mode_count": 2, "coupling": 0.1, "density_table": "j.csv"}}, {STATE}, {GRID}}}"#),
        )
        .unwrap();
        let spec = RunConfig::load(&dir.join("run.json")).unwrap().hamiltonian_spec().unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        assert!((spec.frequencies[1] - 0.75).abs() < 1e-9 && (spec.frequencies[2] - 1.25).abs() < 1e-9);
    }
}
