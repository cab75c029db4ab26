//! Running a resolved scenario and writing its files.

use std::fs;
use std::path::{Path, PathBuf};

use mch_peakon::ch_reference::{integrate_ch, ChState};
use mch_peakon::limit_dynamics::{integrate_limit, three_peakon_thresholds, LimitDynConfig, LimitMode};
use mch_peakon::meanfield::{convergence_study, diagnostics, discretize_measure, Measure1D, StudyMode};
use mch_peakon::reg_dynamics::{collision_rate, integrate_regularized, RegDynConfig, StepSize};
use mch_peakon::weak_residual::{standard_bump_grid, weak_residual_grid, ResidualOptions, Verdict};
use mch_peakon::{EventKind, PeakonEnsemble, Trajectory};
use serde_json::{json, Value};

use crate::config::{resolve, Kind, Mode, Resolved, ScenarioConfig};
use crate::limits::run_limit_suite;
use crate::LabError;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub resolved: Resolved,
    pub out: PathBuf,
    /// File names written, relative to `out`.
    pub files: Vec<String>,
    pub report: Value,
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn text(&mut self, name: &str, body: &str) -> Result<(), LabError> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<(), LabError> {
        let mut body = serde_json::to_string_pretty(v)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn trajectory(&mut self, stem: &str, traj: &Trajectory) -> Result<(), LabError> {
        self.text(&format!("{stem}.csv"), &traj.to_csv())?;
        let events = if stem == "trajectory" { "events.json".to_string() } else { format!("{stem}_events.json") };
        self.json(&events, &traj.events)
    }
}

fn checkpoints(t_end: f64) -> Vec<f64> {
    (0..=8).map(|k| t_end * k as f64 / 8.0).collect()
}

fn limit_run(ens: &PeakonEnsemble, mode: LimitMode, r: &Resolved) -> Result<Trajectory, LabError> {
    let mut cfg = LimitDynConfig::new(mode, r.t_end);
    cfg.dt = r.dt;
    cfg.store_every = r.store_every;
    integrate_limit(ens, &cfg).map_err(|e| LabError::from_core("limit_dynamics", e))
}

fn regularized_run(ens: &PeakonEnsemble, r: &Resolved) -> Result<Trajectory, LabError> {
    let mut cfg = RegDynConfig::new(r.mollifier()?, r.t_end);
    cfg.step = StepSize::Fixed(r.dt);
    cfg.store_every = r.store_every;
    integrate_regularized(ens, &cfg).map_err(|e| LabError::from_core("reg_dynamics", e))
}

fn field_checkpoints(traj: &Trajectory) -> Result<Vec<Value>, LabError> {
    checkpoints(traj.t_end())
        .into_iter()
        .map(|t| {
            let e = traj.ensemble_at(t)?;
            Ok(json!({
                "t": t,
                "field": mch_peakon::ensemble::field_stats(e.positions(), e.amplitudes()),
                "mch_H0": e.mch_h0(),
                "mass": e.amplitudes().iter().sum::<f64>(),
            }))
        })
        .collect()
}

/// `S_k(t) ≥ S_k(0)e^{−C_ε t}` for every adjacent gap at every stored time.
fn gap_bound(traj: &Trajectory, rate: f64) -> Value {
    let gaps_at = |k: usize| -> Vec<f64> {
        match &traj.gaps {
            Some(g) => g[k].clone(),
            None => traj.positions[k].windows(2).map(|w| w[1] - w[0]).collect(),
        }
    };
    let g0 = gaps_at(0);
    let mut worst = f64::INFINITY;
    for k in 0..traj.len() {
        let decay = (-rate * traj.times[k]).exp();
        for (g, s0) in gaps_at(k).iter().zip(&g0) {
            worst = worst.min(g / (s0 * decay));
        }
    }
    json!({
        "rate": rate,
        "min_gap": traj.min_gap(),
        "min_ratio_to_bound": worst,
        "pass": traj.n() < 2 || (traj.min_gap() > 0.0 && worst >= 1.0),
    })
}

fn residual_summary(traj: &Trajectory) -> Result<Value, LabError> {
    let phis = standard_bump_grid(traj);
    let reports = weak_residual_grid(traj, &phis, &ResidualOptions::default())
        .map_err(|e| LabError::from_core("weak_residual", e))?;
    let all = reports.iter().all(|r| r.verdict == Verdict::ConsistentWithWeak);
    let worst = reports.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    Ok(json!({ "max_abs": worst, "all_consistent": all, "reports": reports }))
}

fn final_clusters(traj: &Trajectory) -> usize {
    traj.cluster_count(traj.len() - 1)
}

fn run_particles(r: &Resolved, w: &mut Writer) -> Result<Value, LabError> {
    if r.mode == Mode::Ch {
        let state = ChState::new(r.positions.clone(), r.amplitudes.clone())
            .map_err(|e| LabError::from_core("ch_reference", e))?;
        let ch = integrate_ch(&state, r.dt, r.t_end, r.store_every)
            .map_err(|e| LabError::from_core("ch_reference", e))?;
        w.text("trajectory.csv", &ch.to_csv())?;
        w.json("events.json", &Vec::<()>::new())?;
        let diag = json!({ "H0_drift": ch.h0_drift, "momentum_drift": ch.momentum_drift });
        w.json("diagnostics.json", &diag)?;
        let last = ch.states.last().expect("nonempty run");
        return Ok(json!({
            "final_positions": last.positions,
            "final_amplitudes": last.amplitudes,
            "H0_drift": ch.h0_drift,
            "momentum_drift": ch.momentum_drift,
        }));
    }

    let ens = PeakonEnsemble::new(r.amplitudes.clone(), r.positions.clone())
        .map_err(|e| LabError::from_core("ensemble", e))?
        .with_label(r.scenario.clone());
    let traj = match r.mode {
        Mode::Regularized => regularized_run(&ens, r)?,
        Mode::Sticky => limit_run(&ens, LimitMode::Sticky, r)?,
        Mode::DispersiveLimit => limit_run(&ens, LimitMode::DispersiveLimit, r)?,
        Mode::Ch => unreachable!("handled above"),
    };
    w.trajectory("trajectory", &traj)?;

    let mut diag = json!({
        "mode": r.mode.name(),
        "max_sample_speed": traj.max_sample_speed(),
        "checkpoints": field_checkpoints(&traj)?,
    });
    let mut report = json!({
        "final_positions": traj.final_positions(),
        "final_clusters": final_clusters(&traj),
        "events": traj.events.len(),
        "trajectory": traj.meta,
    });
    if r.mode == Mode::Regularized {
        diag["gap_bound"] = gap_bound(&traj, collision_rate(ens.m0(), &r.mollifier()?));
    } else {
        diag["weak_residual"] = residual_summary(&traj)?;
    }

    match r.scenario.as_str() {
        "fig1" | "fig2" if r.mode == Mode::Regularized => {
            let sticky = limit_run(&ens, LimitMode::Sticky, r)?;
            w.trajectory("reference", &sticky)?;
            report["reference_sup_distance"] = json!(traj.sup_distance(&sticky)?);
            report["reference_final_clusters"] = json!(final_clusters(&sticky));
            if r.scenario == "fig2" {
                let lim = limit_run(&ens, LimitMode::DispersiveLimit, r)?;
                w.trajectory("limit", &lim)?;
                report["limit_sup_distance"] = json!(traj.sup_distance(&lim)?);
                report["limit_thresholds"] = thresholds(&lim);
            }
        }
        "fig2" if r.mode == Mode::DispersiveLimit => report["limit_thresholds"] = thresholds(&traj),
        "two-peakon" if r.amplitudes.len() == 2 => {
            let (p, x) = (&r.amplitudes, &r.positions);
            let t_star = mch_peakon::limit_dynamics::two_peakon_collision_time(x[0], x[1], p[0], p[1])?;
            let merge = traj.events.iter().find(|e| e.kind == EventKind::Merge).map(|e| e.time);
            report["T_star"] = json!(t_star);
            report["merge_time"] = json!(merge);
        }
        "single" => {
            let x = &traj.positions;
            report["measured_speed"] = json!((x[x.len() - 1][0] - x[0][0]) / traj.t_end());
        }
        _ => {}
    }
    w.json("diagnostics.json", &diag)?;
    Ok(report)
}

/// `S₂*`, `T₂` and the recorded split time for a merge of `{0},{1}` followed by a split.
fn thresholds(traj: &Trajectory) -> Value {
    let p = traj.amplitudes();
    let merge = traj
        .events
        .iter()
        .find(|e| e.kind == EventKind::Merge && e.left == [0] && e.right == [1]);
    let (Some(merge), 3) = (merge, p.len()) else {
        return Value::Null;
    };
    let Ok(x) = traj.positions_at(merge.time) else {
        return Value::Null;
    };
    let split = traj.events.iter().find(|e| e.kind == EventKind::Split).map(|e| e.time);
    match three_peakon_thresholds(p[0], p[1], p[2], x[2] - x[0], merge.time) {
        Ok(th) => json!({ "thresholds": th, "merge_time": merge.time, "split_time": split }),
        Err(_) => Value::Null,
    }
}

fn load_measure(r: &Resolved) -> Result<Measure1D, LabError> {
    match &r.measure {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("measure file {}: {e}", path.display())))?;
            Measure1D::from_json(&text).map_err(|e| LabError::Config(format!("measure file {}: {e}", path.display())))
        }
        None => Ok(Measure1D::uniform(1.0, 0.5)?),
    }
}

fn run_measure(r: &Resolved, w: &mut Writer) -> Result<Value, LabError> {
    let m0 = load_measure(r)?;
    let mode = match r.mode {
        Mode::Regularized => StudyMode::Regularized {
            moll: r.mollifier()?,
            step: StepSize::Fixed(r.dt),
        },
        Mode::Sticky => StudyMode::Limit {
            mode: LimitMode::Sticky,
            dt: r.dt,
        },
        Mode::DispersiveLimit => StudyMode::Limit {
            mode: LimitMode::DispersiveLimit,
            dt: r.dt,
        },
        Mode::Ch => unreachable!("rejected when resolving"),
    };
    let disc = discretize_measure(&m0, r.n).map_err(|e| LabError::from_core("meanfield", e))?;
    let traj = mode.run(&disc.ensemble, r.t_end).map_err(|e| LabError::from_core("meanfield", e))?;
    w.trajectory("trajectory", &traj)?;
    let diag = diagnostics(&traj, &m0, &checkpoints(r.t_end)).map_err(|e| LabError::from_core("meanfield", e))?;
    w.json("diagnostics.json", &diag)?;
    w.text("diagnostics.csv", &diag.to_csv())?;

    let study = convergence_study(&m0, &r.n_list, &mode, r.t_end).map_err(|e| LabError::from_core("meanfield", e))?;
    w.text("convergence.csv", &study.to_csv())?;
    let mut study_diag = Vec::new();
    for (d, t) in &study.runs {
        let rep = diagnostics(t, &m0, &checkpoints(r.t_end)).map_err(|e| LabError::from_core("meanfield", e))?;
        study_diag.push(json!({ "n": d.masses.len(), "all_pass": rep.all_pass }));
    }
    Ok(json!({
        "M0": m0.total_variation(),
        "discretization": { "centers": disc.centers, "masses": disc.masses, "dropped": disc.dropped },
        "diagnostics_pass": diag.all_pass,
        "convergence": study,
        "study_diagnostics": study_diag,
        "trajectory": traj.meta,
    }))
}

/// Runs a scenario and writes its files into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunSummary, LabError> {
    let resolved = resolve(cfg)?;
    fs::create_dir_all(out)?;
    let mut w = Writer {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let body = match resolved.kind {
        Kind::Particles => run_particles(&resolved, &mut w)?,
        Kind::Measure => run_measure(&resolved, &mut w)?,
        Kind::Limits => {
            let rep = run_limit_suite(resolved.mollifier, resolved.quad_nodes)?;
            w.text("limits.csv", &rep.to_csv())?;
            serde_json::to_value(rep)?
        }
    };
    let report = json!({
        "scenario": resolved.scenario,
        "config": resolved,
        "result": body,
    });
    w.json("report.json", &report)?;
    Ok(RunSummary {
        resolved,
        out: out.to_path_buf(),
        files: w.files,
        report,
    })
}
