//! Named experiments for the mCH peakon laboratory.
//!
//! A run resolves a [`ScenarioConfig`] against the scenario's defaults, integrates,
//! and writes `trajectory.csv`, `events.json`, `diagnostics.json` and `report.json`
//! to the output directory. Everything is fixed-step and seed-free, so repeated runs
//! produce identical files.

pub mod config;
pub mod limits;
pub mod scenario;

pub use config::{resolve, Mode, Resolved, ScenarioConfig, SCENARIOS};
pub use limits::{run_limit_suite, LimitReport};
pub use scenario::{run_scenario, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort in {module}: {source}")]
    Numerical {
        module: &'static str,
        source: mch_peakon::Error,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical { .. } => 3,
            LabError::Io(_) => 1,
        }
    }

    /// Classifies a library error raised by `module`.
    pub fn from_core(module: &'static str, e: mch_peakon::Error) -> Self {
        use mch_peakon::Error as E;
        match e {
            E::InvalidInput(m) | E::Regime(m) => LabError::Config(format!("{module}: {m}")),
            E::Io(e) => LabError::Io(e.to_string()),
            E::Csv(e) => LabError::Io(e.to_string()),
            E::Json(e) => LabError::Io(e.to_string()),
            source => LabError::Numerical { module, source },
        }
    }
}

impl From<mch_peakon::Error> for LabError {
    fn from(e: mch_peakon::Error) -> Self {
        LabError::from_core("mch_peakon", e)
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
