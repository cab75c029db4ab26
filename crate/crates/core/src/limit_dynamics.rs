//! The ε → 0 particle system.
//!
//! Separated peakons follow the ordered system
//!
//! ```text
//! ẋ_i = p_i²/6 + ½Σ_{j<i} p_i p_j e^{x_j−x_i} + ½Σ_{j>i} p_i p_j e^{x_i−x_j} + Σ_{m<i<n} p_m p_n e^{x_m−x_n}.
//! ```
//!
//! Coincident peakons form a cluster that moves like one peakon carrying the
//! summed amplitude. In sticky mode clusters never separate; in
//! dispersive-limit mode a cluster splits once some contiguous partition
//! `A|B` would have its right block outrun its left block.

use serde::{Deserialize, Serialize};

use crate::kernels::{kernel_g, kernel_gx};
use crate::ode::Rk4;
use crate::trajectory::{Event, EventKind, Method, StepControl, Trajectory, TrajectoryMeta};
use crate::{Error, PeakonEnsemble, Result};

/// The ordered formula evaluated in the order given, whether or not positions increase.
fn formula(x: &[f64], p: &[f64], out: &mut [f64]) {
    let n = p.len();
    // left[i] = Σ_{j<i} p_j e^{x_j − x_i},  right[i] = Σ_{j>i} p_j e^{x_i − x_j}
    let mut left = 0.0;
    for i in 0..n {
        if i > 0 {
            left = (left + p[i - 1]) * (x[i - 1] - x[i]).exp();
        }
        out[i] = left;
    }
    let mut right = 0.0;
    for i in (0..n).rev() {
        if i + 1 < n {
            right = (right + p[i + 1]) * (x[i] - x[i + 1]).exp();
        }
        let l = out[i];
        out[i] = p[i] * p[i] / 6.0 + 0.5 * p[i] * (l + right) + l * right;
    }
}

/// Ordered peakon velocities for strictly increasing positions.
pub fn ordered_rhs(positions: &[f64], amplitudes: &[f64]) -> Result<Vec<f64>> {
    if positions.len() != amplitudes.len() {
        return Err(Error::invalid("positions and amplitudes differ in length"));
    }
    if let Some(i) = positions.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(format!(
            "ordered velocities need strictly increasing positions (x{} ≥ x{})",
            i + 1,
            i + 2
        )));
    }
    let mut out = vec![0.0; positions.len()];
    formula(positions, amplitudes, &mut out);
    Ok(out)
}

/// The ordered formula applied in label order even when the positions are not
/// increasing. Past a crossing this is the continuation that is not a weak solution.
pub fn label_ordered_rhs(positions: &[f64], amplitudes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; positions.len()];
    formula(positions, amplitudes, &mut out);
    out
}

/// The ordered formula after relabelling particles by position.
pub fn crossing_rhs(positions: &[f64], amplitudes: &[f64]) -> Vec<f64> {
    let n = positions.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    let xs: Vec<f64> = idx.iter().map(|&i| positions[i]).collect();
    let ps: Vec<f64> = idx.iter().map(|&i| amplitudes[i]).collect();
    let mut vs = vec![0.0; n];
    formula(&xs, &ps, &mut vs);
    let mut out = vec![0.0; n];
    for (k, &i) in idx.iter().enumerate() {
        out[i] = vs[k];
    }
    out
}

/// A block of consecutive particles `first..end` sharing one position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub first: usize,
    pub end: usize,
    pub position: f64,
    pub amplitude: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.end - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.first
    }

    pub fn members(&self) -> Vec<usize> {
        (self.first..self.end).collect()
    }
}

/// An ordered partition of the particles into clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub clusters: Vec<Cluster>,
}

fn weighted_mean(xa: f64, pa: f64, xb: f64, pb: f64) -> f64 {
    let (wa, wb) = (pa.abs(), pb.abs());
    if wa + wb == 0.0 {
        0.5 * (xa + xb)
    } else {
        (wa * xa + wb * xb) / (wa + wb)
    }
}

impl ClusterState {
    /// Groups neighbours whose gap is at most `tol`.
    pub fn from_ensemble(ens: &PeakonEnsemble, tol: f64) -> Result<Self> {
        if !ens.is_nondecreasing() {
            return Err(Error::invalid("limiting dynamics needs nondecreasing positions"));
        }
        let (x, p) = (ens.positions(), ens.amplitudes());
        let mut clusters: Vec<Cluster> = Vec::new();
        for i in 0..x.len() {
            match clusters.last_mut() {
                Some(c) if x[i] - x[i - 1] <= tol => {
                    c.position = weighted_mean(c.position, c.amplitude, x[i], p[i]);
                    c.amplitude += p[i];
                    c.end = i + 1;
                }
                _ => clusters.push(Cluster {
                    first: i,
                    end: i + 1,
                    position: x[i],
                    amplitude: p[i],
                }),
            }
        }
        Ok(ClusterState { clusters })
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.position).collect()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.amplitude).collect()
    }

    pub fn particle_positions(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.clusters {
            out.extend(std::iter::repeat(c.position).take(c.len()));
        }
        out
    }

    fn set_positions(&mut self, y: &[f64]) {
        for (c, v) in self.clusters.iter_mut().zip(y) {
            c.position = *v;
        }
    }
}

/// Per-cluster velocities from the non-smooth limiting system:
///
/// `(Σ_j p_j G(x_c − x_j))² − (Σ_{j ∉ c} p_j G_x(x_c − x_j))² − (P_c)²/12`.
pub fn limiting_rhs(state: &ClusterState, amplitudes: &[f64]) -> Vec<f64> {
    state
        .clusters
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let mut u = 0.0;
            let mut ux = 0.0;
            for (cj, other) in state.clusters.iter().enumerate() {
                for j in other.first..other.end {
                    u += amplitudes[j] * kernel_g(c.position - other.position);
                    if cj != ci {
                        ux += amplitudes[j] * kernel_gx(c.position - other.position);
                    }
                }
            }
            u * u - ux * ux - c.amplitude * c.amplitude / 12.0
        })
        .collect()
}

/// Velocities `(v_A, v_B)` of the blocks `A = first..first+left_len` and `B` of
/// cluster `index` when placed `gap` apart about the amplitude-weighted centre.
pub fn split_velocities(
    state: &ClusterState,
    amplitudes: &[f64],
    index: usize,
    left_len: usize,
    gap: f64,
) -> Result<(f64, f64)> {
    let c = state
        .clusters
        .get(index)
        .ok_or_else(|| Error::invalid(format!("no cluster {index}")))?;
    if left_len == 0 || left_len >= c.len() {
        return Err(Error::invalid("a split needs two nonempty blocks"));
    }
    let y = state.positions();
    let a = state.amplitudes();
    let pa: f64 = amplitudes[c.first..c.first + left_len].iter().sum();
    let v = probe_velocities(&y, &a, index, pa, a[index] - pa, gap);
    Ok(v)
}

fn split_offsets(pa: f64, pb: f64, gap: f64) -> (f64, f64) {
    let (wa, wb) = (pa.abs(), pb.abs());
    if wa + wb == 0.0 {
        (-0.5 * gap, 0.5 * gap)
    } else {
        (-gap * wb / (wa + wb), gap * wa / (wa + wb))
    }
}

fn probe_velocities(y: &[f64], amp: &[f64], c: usize, pa: f64, pb: f64, gap: f64) -> (f64, f64) {
    let (da, db) = split_offsets(pa, pb, gap);
    let mut xs = Vec::with_capacity(y.len() + 1);
    let mut ps = Vec::with_capacity(y.len() + 1);
    xs.extend_from_slice(&y[..c]);
    ps.extend_from_slice(&amp[..c]);
    xs.push(y[c] + da);
    xs.push(y[c] + db);
    ps.push(pa);
    ps.push(pb);
    xs.extend_from_slice(&y[c + 1..]);
    ps.extend_from_slice(&amp[c + 1..]);
    let mut v = vec![0.0; xs.len()];
    formula(&xs, &ps, &mut v);
    (v[c], v[c + 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMode {
    #[default]
    Sticky,
    DispersiveLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDynConfig {
    pub mode: LimitMode,
    pub collide_tol: f64,
    pub split_probe_gap: f64,
    pub dt: f64,
    pub t_end: f64,
    pub store_every: usize,
}

impl LimitDynConfig {
    pub fn new(mode: LimitMode, t_end: f64) -> Self {
        LimitDynConfig {
            mode,
            collide_tol: 1e-10,
            split_probe_gap: 1e-8,
            dt: 1e-3,
            t_end,
            store_every: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.collide_tol) || !pos(self.split_probe_gap) || !pos(self.dt) || !pos(self.t_end) {
            return Err(Error::invalid(
                "collide_tol, split_probe_gap, dt and t_end must be positive",
            ));
        }
        if self.store_every == 0 {
            return Err(Error::invalid("store_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    cluster: usize,
    left_len: usize,
    value: f64,
}

struct Engine<'a> {
    p: &'a [f64],
    cfg: &'a LimitDynConfig,
    state: ClusterState,
    rk: Rk4,
    max_speed: f64,
    events: Vec<Event>,
}

impl<'a> Engine<'a> {
    fn step(&mut self, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let amps = self.state.amplitudes();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            formula(y, &amps, dy);
            Ok(())
        };
        let mut out = vec![0.0; y.len()];
        if h == 0.0 {
            out.copy_from_slice(y);
            return Ok(out);
        }
        self.rk.step(&mut f, 0.0, y, h, &mut out)?;
        for v in self.rk.first_stage() {
            self.max_speed = self.max_speed.max(v.abs());
        }
        Ok(out)
    }

    fn best_probe(&self, y: &[f64]) -> Option<Probe> {
        if self.cfg.mode != LimitMode::DispersiveLimit {
            return None;
        }
        let amp = self.state.amplitudes();
        let mut best: Option<Probe> = None;
        for (ci, c) in self.state.clusters.iter().enumerate() {
            let mut pa = 0.0;
            for m in 1..c.len() {
                pa += self.p[c.first + m - 1];
                let (va, vb) = probe_velocities(y, &amp, ci, pa, c.amplitude - pa, self.cfg.split_probe_gap);
                let value = vb - va;
                if best.map_or(true, |b| value > b.value) {
                    best = Some(Probe {
                        cluster: ci,
                        left_len: m,
                        value,
                    });
                }
            }
        }
        best
    }

    fn probe_value(&self, y: &[f64], cluster: usize, left_len: usize) -> f64 {
        let c = &self.state.clusters[cluster];
        let pa: f64 = self.p[c.first..c.first + left_len].iter().sum();
        let (va, vb) = probe_velocities(
            y,
            &self.state.amplitudes(),
            cluster,
            pa,
            c.amplitude - pa,
            self.cfg.split_probe_gap,
        );
        vb - va
    }

    fn min_gap(y: &[f64]) -> f64 {
        y.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Earliest `τ ∈ (0, h]` where the smallest gap reaches `collide_tol`.
    fn locate_merge(&mut self, y: &[f64], h: f64, step: usize, t: f64) -> Result<f64> {
        let tol = self.cfg.collide_tol;
        let (mut lo, mut hi) = (0.0, h);
        let mut g_hi = Self::min_gap(&self.step(y, hi)?);
        for _ in 0..200 {
            if g_hi >= -tol {
                return Ok(hi);
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = Self::min_gap(&self.step(y, mid)?);
            if g <= tol {
                hi = mid;
                g_hi = g;
            } else {
                lo = mid;
            }
        }
        if g_hi >= -tol {
            return Ok(hi);
        }
        Err(Error::EventLocation {
            step,
            time: t,
            reason: format!("gap stuck at {g_hi:e} after bisection"),
        })
    }

    /// Earliest `τ ∈ (0, h]` where the best split probe turns positive.
    fn locate_split(&mut self, y: &[f64], h: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 {
                break;
            }
            let ym = self.step(y, mid)?;
            if self.best_probe(&ym).map_or(false, |b| b.value > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    fn merge_all(&mut self, y: &mut Vec<f64>, time: f64) -> bool {
        let tol = self.cfg.collide_tol;
        let mut merged = false;
        let mut c = 0;
        while c + 1 < y.len() {
            if y[c + 1] - y[c] <= tol {
                let (a, b) = (self.state.clusters[c].clone(), self.state.clusters[c + 1].clone());
                let pos = weighted_mean(y[c], a.amplitude, y[c + 1], b.amplitude);
                self.events.push(Event {
                    time,
                    kind: EventKind::Merge,
                    indices: (a.first..b.end).collect(),
                    left: a.members(),
                    right: b.members(),
                    probe_before: None,
                    probe_at: None,
                });
                self.state.clusters[c] = Cluster {
                    first: a.first,
                    end: b.end,
                    position: pos,
                    amplitude: a.amplitude + b.amplitude,
                };
                self.state.clusters.remove(c + 1);
                y[c] = pos;
                y.remove(c + 1);
                merged = true;
            } else {
                c += 1;
            }
        }
        merged
    }

    fn split(&mut self, y: &mut Vec<f64>, probe: Probe, before: Option<f64>, time: f64) {
        let c = self.state.clusters[probe.cluster].clone();
        let mid = c.first + probe.left_len;
        let pa: f64 = self.p[c.first..mid].iter().sum();
        let pb = c.amplitude - pa;
        let (da, db) = split_offsets(pa, pb, self.cfg.split_probe_gap);
        let x = y[probe.cluster];
        let a = Cluster {
            first: c.first,
            end: mid,
            position: x + da,
            amplitude: pa,
        };
        let b = Cluster {
            first: mid,
            end: c.end,
            position: x + db,
            amplitude: pb,
        };
        self.events.push(Event {
            time,
            kind: EventKind::Split,
            indices: c.members(),
            left: a.members(),
            right: b.members(),
            probe_before: before,
            probe_at: Some(probe.value),
        });
        y[probe.cluster] = a.position;
        y.insert(probe.cluster + 1, b.position);
        self.state.clusters[probe.cluster] = a;
        self.state.clusters.insert(probe.cluster + 1, b);
    }

    /// Splits every cluster whose best probe is already positive.
    fn settle_splits(&mut self, y: &mut Vec<f64>, time: f64) {
        for _ in 0..self.p.len() {
            match self.best_probe(y) {
                Some(pr) if pr.value > 0.0 => self.split(y, pr, None, time),
                _ => break,
            }
        }
    }
}

/// Event-driven integration of the limiting system.
pub fn integrate_limit(ens0: &PeakonEnsemble, cfg: &LimitDynConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let state = ClusterState::from_ensemble(ens0, cfg.collide_tol)?;
    let n = ens0.len();
    let mut eng = Engine {
        p: ens0.amplitudes(),
        cfg,
        state,
        rk: Rk4::new(0),
        max_speed: 0.0,
        events: Vec::new(),
    };
    let mut y = eng.state.positions();
    eng.settle_splits(&mut y, 0.0);
    eng.state.set_positions(&y);

    let mut times = vec![0.0];
    let mut positions = vec![eng.state.particle_positions()];
    let push = |times: &mut Vec<f64>, positions: &mut Vec<Vec<f64>>, t: f64, x: Vec<f64>| {
        if *times.last().unwrap() >= t {
            *positions.last_mut().unwrap() = x;
        } else {
            times.push(t);
            positions.push(x);
        }
    };

    let nsteps = ((cfg.t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut t = 0.0;
    for k in 0..nsteps {
        let target = if k + 1 == nsteps { cfg.t_end } else { (k + 1) as f64 * cfg.dt };
        let mut guard = 0;
        while t < target {
            guard += 1;
            if guard > 4 * n + 8 {
                return Err(Error::EventLocation {
                    step: k + 1,
                    time: t,
                    reason: "too many events inside one step".into(),
                });
            }
            let h = target - t;
            let y1 = eng.step(&y, h)?;
            let merge_tau = if y1.len() > 1 && Engine::min_gap(&y1) <= cfg.collide_tol {
                Some(eng.locate_merge(&y, h, k + 1, t)?)
            } else {
                None
            };
            let split_tau = match eng.best_probe(&y1) {
                Some(pr) if pr.value > 0.0 => Some(eng.locate_split(&y, h)?),
                _ => None,
            };
            match (merge_tau, split_tau) {
                (None, None) => {
                    y = y1;
                    t = target;
                }
                (Some(tau), s) if s.map_or(true, |s| tau <= s) => {
                    y = eng.step(&y, tau)?;
                    t = if tau >= h { target } else { t + tau };
                    eng.merge_all(&mut y, t);
                    eng.settle_splits(&mut y, t);
                    eng.state.set_positions(&y);
                    push(&mut times, &mut positions, t, eng.state.particle_positions());
                }
                (_, Some(tau)) => {
                    let y0 = y.clone();
                    y = eng.step(&y, tau)?;
                    t = if tau >= h { target } else { t + tau };
                    let pr = eng.best_probe(&y).expect("split located on a multi-particle cluster");
                    let before = eng.probe_value(&y0, pr.cluster, pr.left_len);
                    eng.split(&mut y, pr, Some(before), t);
                    eng.state.set_positions(&y);
                    push(&mut times, &mut positions, t, eng.state.particle_positions());
                }
                _ => unreachable!(),
            }
        }
        eng.state.set_positions(&y);
        if (k + 1) % cfg.store_every == 0 || k + 1 == nsteps {
            push(&mut times, &mut positions, target, eng.state.particle_positions());
        }
    }

    Ok(Trajectory {
        times,
        positions,
        gaps: None,
        events: eng.events,
        meta: TrajectoryMeta {
            method: match cfg.mode {
                LimitMode::Sticky => Method::Sticky,
                LimitMode::DispersiveLimit => Method::DispersiveLimit,
            },
            epsilon: None,
            mollifier: None,
            quad_nodes: None,
            amplitudes: ens0.amplitudes().to_vec(),
            step: StepControl {
                scheme: "rk4_events".into(),
                dt: cfg.dt,
                rtol: None,
                steps: nsteps,
                rejected: 0,
                store_every: cfg.store_every,
                max_speed: eng.max_speed,
            },
            experimental_split_rule: cfg.mode == LimitMode::DispersiveLimit && n >= 4,
            label: ens0.label().to_string(),
        },
    })
}

/// Sticky dynamics: colliding clusters merge and never separate.
pub fn sticky_integrate(ens0: &PeakonEnsemble, cfg: &LimitDynConfig) -> Result<Trajectory> {
    integrate_limit(ens0, &LimitDynConfig { mode: LimitMode::Sticky, ..cfg.clone() })
}

/// Sticky dynamics plus the split rule.
pub fn dispersive_limit_integrate(ens0: &PeakonEnsemble, cfg: &LimitDynConfig) -> Result<Trajectory> {
    integrate_limit(
        ens0,
        &LimitDynConfig {
            mode: LimitMode::DispersiveLimit,
            ..cfg.clone()
        },
    )
}

/// The two ways of continuing the ordered system through a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuation {
    /// Relabel by position, so the particles pass through each other.
    Crossing,
    /// Keep evaluating the formula in label order.
    Unreordered,
}

/// Plain RK4 of one of the crossing continuations, stored every step and at each crossing.
pub fn continuation_integrate(
    ens0: &PeakonEnsemble,
    kind: Continuation,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::invalid("dt and t_end must be positive"));
    }
    let p = ens0.amplitudes().to_vec();
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let v = match kind {
            Continuation::Crossing => crossing_rhs(y, &p),
            Continuation::Unreordered => label_ordered_rhs(y, &p),
        };
        dy.copy_from_slice(&v);
        Ok(())
    };
    let nsteps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut rk = Rk4::new(p.len());
    let mut y = ens0.positions().to_vec();
    let mut next = y.clone();
    let mut times = vec![0.0];
    let mut positions = vec![y.clone()];
    let mut max_speed = 0.0f64;
    let order = |y: &[f64]| {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        idx
    };
    let mut t = 0.0;
    for k in 0..nsteps {
        let target = if k + 1 == nsteps { t_end } else { (k + 1) as f64 * dt };
        // a crossing is a kink in the velocities, so each one gets its own sample
        let mut guard = 0;
        while t < target {
            let h = target - t;
            rk.step(&mut f, t, &y, h, &mut next)?;
            max_speed = rk.first_stage().iter().fold(max_speed, |m, v| m.max(v.abs()));
            let before = order(&y);
            if order(&next) != before && guard <= p.len() * p.len() {
                guard += 1;
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    rk.step(&mut f, t, &y, mid, &mut next)?;
                    if order(&next) != before {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if hi < h {
                    rk.step(&mut f, t, &y, hi, &mut next)?;
                    std::mem::swap(&mut y, &mut next);
                    t += hi;
                    times.push(t);
                    positions.push(y.clone());
                    continue;
                }
            }
            std::mem::swap(&mut y, &mut next);
            t = target;
        }
        times.push(t);
        positions.push(y.clone());
    }
    Ok(Trajectory {
        times,
        positions,
        gaps: None,
        events: Vec::new(),
        meta: TrajectoryMeta {
            method: match kind {
                Continuation::Crossing => Method::Crossing,
                Continuation::Unreordered => Method::Unreordered,
            },
            epsilon: None,
            mollifier: None,
            quad_nodes: None,
            amplitudes: p.clone(),
            step: StepControl {
                scheme: "rk4".into(),
                dt,
                rtol: None,
                steps: nsteps,
                rejected: 0,
                store_every: 1,
                max_speed,
            },
            experimental_split_rule: false,
            label: ens0.label().to_string(),
        },
    })
}

/// `T_* = 6(c₂ − c₁)/(p₁² − p₂²)` when the rear peakon is the faster one.
pub fn two_peakon_collision_time(c1: f64, c2: f64, p1: f64, p2: f64) -> Result<Option<f64>> {
    if !(c1 < c2) {
        return Err(Error::invalid("two-peakon collision time needs c1 < c2"));
    }
    let rel = p1 * p1 - p2 * p2;
    Ok((rel > 0.0).then(|| 6.0 * (c2 - c1) / rel))
}

/// `S₂*`: the distance to the third peakon below which the merged pair `{1,2}` splits.
///
/// Solves `(p₂² − p₁²)/6 + ½(p₁ + p₂)p₃e^{−S} = 0`, i.e. `S₂* = ln(3p₃/(p₁ − p₂))`.
pub fn s2_star(p1: f64, p2: f64, p3: f64) -> f64 {
    (3.0 * p3 / (p1 - p2)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePeakonThresholds {
    #[serde(rename = "S2_star")]
    pub s2_star: f64,
    /// Predicted split time; `None` when the pair never reaches `S₂*`.
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
}

/// Split threshold and predicted split time for a merged pair `{1,2}` chasing
/// peakon 3, given the gap `S₂` to peakon 3 at the merge time `T_*`.
pub fn three_peakon_thresholds(
    p1: f64,
    p2: f64,
    p3: f64,
    s2_at_merge: f64,
    t_merge: f64,
) -> Result<ThreePeakonThresholds> {
    if !(p1 > p2 && p2 > 0.0 && p3 > 0.0 && p1 + p2 > p3) {
        return Err(Error::Regime(format!(
            "three-peakon thresholds need p1 > p2 > 0, p3 > 0, p1 + p2 > p3; got ({p1}, {p2}, {p3})"
        )));
    }
    let s = s2_star(p1, p2, p3);
    let t2 = if s <= 0.0 {
        None
    } else if s2_at_merge <= s {
        Some(t_merge)
    } else {
        let closing = ((p1 + p2).powi(2) - p3 * p3) / 6.0;
        Some(t_merge + (s2_at_merge - s) / closing)
    };
    Ok(ThreePeakonThresholds { s2_star: s, t2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ens(p: &[f64], x: &[f64]) -> PeakonEnsemble {
        PeakonEnsemble::new(p.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn ordered_two_peakon_values() {
        let v = ordered_rhs(&[0.0, 1.0], &[2.0, 1.0]).unwrap();
        let e = (-1f64).exp();
        assert_abs_diff_eq!(v[0], 4.0 / 6.0 + e, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0 / 6.0 + e, epsilon = 1e-15);
        assert!(ordered_rhs(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn limiting_rhs_merged_speeds() {
        let s = ClusterState::from_ensemble(&ens(&[3.0], &[0.0]), 1e-10).unwrap();
        assert_abs_diff_eq!(limiting_rhs(&s, &[3.0])[0], 9.0 / 6.0, epsilon = 1e-15);
        let s = ClusterState::from_ensemble(&ens(&[1.0, 1.0], &[0.5, 0.5]), 1e-10).unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(limiting_rhs(&s, &[1.0, 1.0])[0], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn collision_time_formula() {
        assert_eq!(two_peakon_collision_time(0.0, 1.0, 2.0, 1.0).unwrap(), Some(2.0));
        assert_eq!(two_peakon_collision_time(-7.0, -5.0, 4.0, 2.0).unwrap(), Some(1.0));
        assert_eq!(two_peakon_collision_time(0.0, 1.0, 1.0, -1.0).unwrap(), None);
        assert!(two_peakon_collision_time(1.0, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn thresholds() {
        let th = three_peakon_thresholds(4.0, 2.0, 3.0, 3.0, 0.5).unwrap();
        assert_abs_diff_eq!(th.s2_star, 4.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(th.t2.unwrap(), 0.5 + 6.0 * (3.0 - 4.5f64.ln()) / 27.0, epsilon = 1e-15);
        assert!(three_peakon_thresholds(2.0, 4.0, 3.0, 3.0, 0.5).is_err());
        assert!(three_peakon_thresholds(4.0, 2.0, 7.0, 3.0, 0.5).is_err());
        // a vanishing third peakon never pulls the pair apart
        let weak = three_peakon_thresholds(4.0, 2.0, 1e-6, 3.0, 0.5).unwrap();
        assert!(weak.s2_star < 0.0 && weak.t2.is_none());
    }

    #[test]
    fn two_peakon_sticky_collision() {
        let cfg = LimitDynConfig::new(LimitMode::Sticky, 4.0);
        let tr = sticky_integrate(&ens(&[2.0, 1.0], &[0.0, 1.0]), &cfg).unwrap();
        assert_eq!(tr.events.len(), 1);
        assert!((tr.events[0].time - 2.0).abs() < 1e-6, "{}", tr.events[0].time);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        let k = tr.times.len() - 1;
        let v = (tr.positions[k][0] - tr.positions[k - 1][0]) / (tr.times[k] - tr.times[k - 1]);
        assert_abs_diff_eq!(v, 1.5, epsilon = 1e-9);
    }
}
