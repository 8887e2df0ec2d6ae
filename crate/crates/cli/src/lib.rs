//! Library side of the `ehrenfest` command: configuration and run orchestration.

pub mod config;
pub mod run;

use ehrenfest_core::ehrenfest::ClosureError;

pub use config::{BathConfig, GridConfig, Outputs, RunConfig, StateConfig};
pub use run::run;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Divergence(#[from] ClosureError),
    #[error("oracle check failed: {0}")]
    Oracle(String),
    #[error("{0}")]
    Other(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Divergence(ClosureError::HierarchyDivergence { .. }) => 3,
            RunError::Divergence(_) => 2,
            RunError::Oracle(_) => 4,
            RunError::Other(_) => 1,
        }
    }
}
