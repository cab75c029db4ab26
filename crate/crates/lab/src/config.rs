//! Scenario configuration: what the user asked for and what actually runs.

use std::path::PathBuf;

use mch_peakon::{Mollifier, MollifierFamily};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Regularized,
    Sticky,
    DispersiveLimit,
    Ch,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Regularized => "regularized",
            Mode::Sticky => "sticky",
            Mode::DispersiveLimit => "dispersive_limit",
            Mode::Ch => "ch",
        }
    }
}

/// A config file or a named scenario with overrides. Unset fields take the
/// scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub mollifier: Option<MollifierFamily>,
    #[serde(default)]
    pub quad_nodes: Option<usize>,
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
    /// Path to a measure JSON file.
    #[serde(default)]
    pub measure: Option<PathBuf>,
    /// Particle count for a measure discretization.
    #[serde(default)]
    pub n: Option<usize>,
    /// Particle counts for the convergence study.
    #[serde(default)]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub store_every: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn named(name: &str) -> Self {
        ScenarioConfig {
            scenario: name.to_string(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(format!("config: {e}")))
    }
}

/// What kind of run a scenario is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Particles,
    Measure,
    Limits,
}

/// Every setting of a run, with defaults filled in; written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub scenario: String,
    pub kind: Kind,
    pub mode: Mode,
    pub epsilon: Option<f64>,
    pub mollifier: MollifierFamily,
    pub quad_nodes: usize,
    pub amplitudes: Vec<f64>,
    pub positions: Vec<f64>,
    /// `None` means the built-in uniform density ½ on `[−1, 1]`.
    pub measure: Option<PathBuf>,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub t_end: f64,
    pub dt: f64,
    pub store_every: usize,
}

impl Resolved {
    pub fn mollifier(&self) -> Result<Mollifier, LabError> {
        let eps = self
            .epsilon
            .ok_or_else(|| LabError::Config("regularized mode requires epsilon".into()))?;
        Mollifier::with_nodes(self.mollifier, eps, self.quad_nodes).map_err(|e| LabError::Config(e.to_string()))
    }
}

pub const SCENARIOS: &[&str] = &[
    "fig1",
    "fig2",
    "fig3a",
    "fig3b",
    "two-peakon",
    "single",
    "ch-canary",
    "meanfield",
    "limits",
    "custom",
];

/// The built-in defaults of a named scenario.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let particles = |mode, p: &[f64], x: &[f64], eps: Option<f64>, t_end| ScenarioConfig {
        scenario: name.to_string(),
        mode: Some(mode),
        epsilon: eps,
        amplitudes: Some(p.to_vec()),
        positions: Some(x.to_vec()),
        t_end: Some(t_end),
        ..Default::default()
    };
    Some(match name {
        "fig1" => particles(Mode::Regularized, &[4.0, 2.0, 1.0], &[-7.0, -5.0, -3.0], Some(0.02), 1.8),
        "fig2" => particles(Mode::Regularized, &[4.0, 2.0, 3.0], &[-7.0, -6.0, -2.0], Some(0.02), 2.0),
        "fig3a" => particles(Mode::Sticky, &[4.0, 3.0, 2.0], &[-4.0, -3.0, 4.0], None, 3.0),
        "fig3b" => particles(Mode::Sticky, &[4.0, 3.0, 2.0], &[-4.0, -2.0, 4.0], None, 3.0),
        "two-peakon" => particles(Mode::Sticky, &[2.0, 1.0], &[0.0, 1.0], None, 4.0),
        "single" => particles(Mode::Regularized, &[1.0], &[0.0], Some(0.02), 1.0),
        "ch-canary" => particles(Mode::Ch, &[2.0, 1.0], &[0.0, 1.0], None, 10.0),
        "meanfield" => ScenarioConfig {
            scenario: name.to_string(),
            mode: Some(Mode::Sticky),
            n: Some(32),
            n_list: Some(vec![8, 16, 32, 64]),
            t_end: Some(1.0),
            ..Default::default()
        },
        "limits" => ScenarioConfig::named(name),
        "custom" => ScenarioConfig::named(name),
        _ => return None,
    })
}

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

/// Applies the scenario defaults under the user's settings and checks completeness.
pub fn resolve(cfg: &ScenarioConfig) -> Result<Resolved, LabError> {
    let base = preset(&cfg.scenario).ok_or_else(|| {
        config_err(format!(
            "unknown scenario '{}'; expected one of {}",
            cfg.scenario,
            SCENARIOS.join(", ")
        ))
    })?;
    let pick = |a: &Option<f64>, b: &Option<f64>| a.or(*b);
    let kind = match cfg.scenario.as_str() {
        "limits" => Kind::Limits,
        "meanfield" => Kind::Measure,
        "custom" if cfg.measure.is_some() => Kind::Measure,
        _ => Kind::Particles,
    };
    let mode = cfg.mode.or(base.mode).unwrap_or(match kind {
        Kind::Measure => Mode::Sticky,
        _ => Mode::Regularized,
    });
    let epsilon = pick(&cfg.epsilon, &base.epsilon).or(if mode == Mode::Regularized && kind == Kind::Measure {
        Some(0.05)
    } else {
        None
    });
    let amplitudes = cfg.amplitudes.clone().or(base.amplitudes).unwrap_or_default();
    let positions = cfg.positions.clone().or(base.positions).unwrap_or_default();
    let t_end = pick(&cfg.t_end, &base.t_end).unwrap_or(1.0);
    let dt = match (cfg.dt, mode, epsilon) {
        (Some(dt), ..) => dt,
        (None, Mode::Regularized, Some(eps)) => mch_peakon::reg_dynamics::auto_dt(eps),
        _ => 1e-3,
    };
    let r = Resolved {
        scenario: cfg.scenario.clone(),
        kind,
        mode,
        epsilon,
        mollifier: cfg.mollifier.unwrap_or_default(),
        quad_nodes: cfg.quad_nodes.unwrap_or(64),
        amplitudes,
        positions,
        measure: cfg.measure.clone(),
        n: cfg.n.or(base.n).unwrap_or(32),
        n_list: cfg.n_list.clone().or(base.n_list).unwrap_or_else(|| vec![8, 16, 32, 64]),
        t_end,
        dt,
        store_every: cfg.store_every.unwrap_or(1),
    };
    check(&r)?;
    Ok(r)
}

fn check(r: &Resolved) -> Result<(), LabError> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !positive(r.t_end) {
        return Err(config_err(format!("t_end = {} must be positive", r.t_end)));
    }
    if !positive(r.dt) {
        return Err(config_err(format!("dt = {} must be positive", r.dt)));
    }
    if r.store_every == 0 {
        return Err(config_err("store_every must be at least 1"));
    }
    match r.kind {
        Kind::Particles => {
            if r.amplitudes.is_empty() {
                return Err(config_err("amplitudes and positions are required (or a measure file)"));
            }
            if r.amplitudes.len() != r.positions.len() {
                return Err(config_err(format!(
                    "{} amplitudes but {} positions",
                    r.amplitudes.len(),
                    r.positions.len()
                )));
            }
            if r.mode != Mode::Ch && !r.positions.windows(2).all(|w| w[0] < w[1]) {
                return Err(config_err("positions must be strictly increasing"));
            }
        }
        Kind::Measure => {
            if r.mode == Mode::Ch {
                return Err(config_err("measure data runs in regularized, sticky or dispersive_limit mode"));
            }
            if r.n == 0 || r.n_list.iter().any(|n| *n == 0) {
                return Err(config_err("particle counts must be positive"));
            }
            if r.n_list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err("n_list must be strictly increasing"));
            }
        }
        Kind::Limits => {}
    }
    if r.mode == Mode::Regularized && r.kind != Kind::Limits {
        r.mollifier()?;
    }
    Ok(())
}
