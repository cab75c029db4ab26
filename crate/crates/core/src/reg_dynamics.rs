//! The dispersive regularization: particles move with
//!
//! ```text
//! ẋ_i = U^{N,ε}(x_i),   U^{N,ε} = ρ_ε ∗ [(u^{N,ε})² − (u_x^{N,ε})²] = ρ_ε ∗ 4AB,
//! A(y) = Σ p_j f₂(y − x_j),   B(y) = Σ p_j f₁(y − x_j).
//! ```
//!
//! Adjacent gaps of this system decay like `e^{−C_ε t}` but never close. Merging
//! peakons therefore reach gaps far below the spacing of `f64` positions, so the
//! integrator evolves the leftmost position together with the gaps
//! `S_k = x_{k+1} − x_k`, whose rates are formed from differences of the split
//! kernels and never from differences of positions.

use serde::{Deserialize, Serialize};

use crate::kernels::Mollifier;
use crate::ode::{DoPri5, Rk4, Tolerance};
use crate::quadrature::{simpson, Rule};
use crate::test_function::TestFunction;
use crate::trajectory::{Method, StepControl, Trajectory, TrajectoryMeta};
use crate::{Error, PeakonEnsemble, Result};

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// Fixed RK4 with `dt = min(ε/20, 10⁻³)`.
    Auto,
    /// Fixed RK4 with the given `dt`.
    Fixed(f64),
    /// Dormand–Prince 5(4) with the given relative tolerance.
    Adaptive { rtol: f64 },
}

#[derive(Debug, Clone)]
pub struct RegDynConfig {
    pub moll: Mollifier,
    pub step: StepSize,
    pub t_end: f64,
    pub store_every: usize,
    /// A step aborts if any gap ends at or below this value.
    pub gap_floor: f64,
}

impl RegDynConfig {
    pub fn new(moll: Mollifier, t_end: f64) -> Self {
        RegDynConfig {
            moll,
            step: StepSize::Auto,
            t_end,
            store_every: 1,
            gap_floor: 0.0,
        }
    }

    /// The fixed step, or the initial step for adaptive runs.
    pub fn dt(&self) -> f64 {
        match self.step {
            StepSize::Fixed(dt) => dt,
            StepSize::Auto | StepSize::Adaptive { .. } => auto_dt(self.moll.epsilon()),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end must be positive"));
        }
        if self.store_every == 0 {
            return Err(Error::invalid("store_every must be at least 1"));
        }
        match self.step {
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                Err(Error::invalid("dt must be positive"))
            }
            StepSize::Adaptive { rtol } if !(rtol > 0.0) => Err(Error::invalid("rtol must be positive")),
            _ => Ok(()),
        }
    }
}

pub fn auto_dt(epsilon: f64) -> f64 {
    (epsilon / 20.0).min(1e-3)
}

/// `C_ε = M₀²(C₀/ε + 1)`, the rate in the gap lower bound `S_k(t) ≥ S_k(0) e^{−C_ε t}`.
pub fn collision_rate(m0: f64, moll: &Mollifier) -> f64 {
    m0 * m0 * (moll.c0() / moll.epsilon() + 1.0)
}

/// `U^{N,ε}(x_i)` for every particle.
pub fn velocity_field(ens: &PeakonEnsemble, moll: &Mollifier) -> Result<Vec<f64>> {
    let (x, p) = (ens.positions(), ens.amplitudes());
    let n = p.len();
    let mut v = vec![0.0; n];
    for (delta, w) in moll.nodes() {
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..n {
                let z = x[i] - x[j] - delta;
                a += p[j] * moll.f1(-z);
                b += p[j] * moll.f1(z);
            }
            v[i] += w * 4.0 * a * b;
        }
    }
    if let Some(i) = v.iter().position(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("velocity of particle {}", i + 1)));
    }
    Ok(v)
}

/// Right-hand side in the coordinates `(x₁, S₁, …, S_{N−1})`.
struct GapField<'a> {
    moll: &'a Mollifier,
    p: &'a [f64],
    r: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    vel: Vec<f64>,
    gl: Rule,
    small: f64,
    max_speed: f64,
}

impl<'a> GapField<'a> {
    fn new(moll: &'a Mollifier, p: &'a [f64]) -> Self {
        let n = p.len();
        GapField {
            moll,
            p,
            r: vec![0.0; n],
            f1: vec![0.0; n * n],
            f2: vec![0.0; n * n],
            a: vec![0.0; n],
            b: vec![0.0; n],
            vel: vec![0.0; n],
            gl: Rule::legendre(4),
            small: 1e-3 * moll.epsilon(),
            max_speed: 0.0,
        }
    }

    /// `f₁(z + s) − f₁(z)`, by quadrature of `f₁'` when `s` is tiny.
    fn diff_f1(&self, z: f64, s: f64) -> f64 {
        let m = self.moll;
        self.gl.integrate(z, z + s, |y| m.f1_prime(y))
    }

    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.p.len();
        let p = self.p;
        self.r[0] = 0.0;
        for k in 1..n {
            self.r[k] = self.r[k - 1] + y[k];
        }
        dy.iter_mut().for_each(|d| *d = 0.0);
        self.vel.iter_mut().for_each(|v| *v = 0.0);
        for (delta, w) in self.moll.nodes() {
            for k in 0..n {
                let (mut a, mut b) = (0.0, 0.0);
                for j in 0..n {
                    let z = self.r[k] - self.r[j] - delta;
                    let (u1, u2) = (self.moll.f1(z), self.moll.f1(-z));
                    self.f1[k * n + j] = u1;
                    self.f2[k * n + j] = u2;
                    a += p[j] * u2;
                    b += p[j] * u1;
                }
                self.a[k] = a;
                self.b[k] = b;
                self.vel[k] += w * 4.0 * a * b;
            }
            for k in 0..n.saturating_sub(1) {
                let s = y[k + 1];
                let (mut da, mut db) = (0.0, 0.0);
                if s < self.small {
                    for j in 0..n {
                        let z = self.r[k] - self.r[j] - delta;
                        db += p[j] * self.diff_f1(z, s);
                        da -= p[j] * self.diff_f1(-z - s, s);
                    }
                } else {
                    for j in 0..n {
                        db += p[j] * (self.f1[(k + 1) * n + j] - self.f1[k * n + j]);
                        da += p[j] * (self.f2[(k + 1) * n + j] - self.f2[k * n + j]);
                    }
                }
                dy[k + 1] += w * 4.0 * (self.a[k + 1] * db + self.b[k] * da);
            }
        }
        dy[0] = self.vel[0];
        for (i, v) in self.vel.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::non_finite(format!("velocity of particle {}", i + 1)));
            }
            self.max_speed = self.max_speed.max(v.abs());
        }
        if dy.iter().any(|d| !d.is_finite()) {
            return Err(Error::non_finite("gap rates"));
        }
        Ok(())
    }
}

fn expand(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(y.len());
    let mut r = 0.0;
    x.push(y[0]);
    for s in &y[1..] {
        r += s;
        x.push(y[0] + r);
    }
    (x, y[1..].to_vec())
}

fn check_gaps(y: &[f64], floor: f64, step: usize, time: f64) -> Result<()> {
    if let Some(i) = (1..y.len()).find(|&i| !(y[i] > floor) || !y[i].is_finite()) {
        return Err(Error::OrderingViolation {
            step,
            time,
            index: i,
            gap: y[i],
        });
    }
    if !y[0].is_finite() {
        return Err(Error::non_finite(format!("position at step {step}")));
    }
    Ok(())
}

/// Integrates the regularized system from strictly increasing initial positions.
pub fn integrate_regularized(ens0: &PeakonEnsemble, cfg: &RegDynConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !ens0.is_strictly_increasing() {
        return Err(Error::invalid("regularized dynamics needs strictly increasing positions"));
    }
    let x0 = ens0.positions();
    let mut y: Vec<f64> = std::iter::once(x0[0])
        .chain(x0.windows(2).map(|w| w[1] - w[0]))
        .collect();
    let mut field = GapField::new(&cfg.moll, ens0.amplitudes());
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| field.eval(y, dy);

    let mut times = vec![0.0];
    let (x, g) = expand(&y);
    let mut positions = vec![x];
    let mut gaps = vec![g];
    let dt = cfg.dt();
    let mut step = StepControl {
        scheme: String::new(),
        dt,
        rtol: None,
        steps: 0,
        rejected: 0,
        store_every: cfg.store_every,
        max_speed: 0.0,
    };

    match cfg.step {
        StepSize::Auto | StepSize::Fixed(_) => {
            step.scheme = "rk4".into();
            let nsteps = ((cfg.t_end / dt) - 1e-9).ceil().max(1.0) as usize;
            let mut rk = Rk4::new(y.len());
            let mut next = vec![0.0; y.len()];
            for k in 0..nsteps {
                let t = k as f64 * dt;
                let t_next = if k + 1 == nsteps { cfg.t_end } else { (k + 1) as f64 * dt };
                rk.step(&mut f, t, &y, t_next - t, &mut next)?;
                check_gaps(&next, cfg.gap_floor, k + 1, t_next)?;
                std::mem::swap(&mut y, &mut next);
                if (k + 1) % cfg.store_every == 0 || k + 1 == nsteps {
                    times.push(t_next);
                    let (x, g) = expand(&y);
                    positions.push(x);
                    gaps.push(g);
                }
            }
            step.steps = nsteps;
        }
        StepSize::Adaptive { rtol } => {
            step.scheme = "dopri5".into();
            step.rtol = Some(rtol);
            let mut atol = vec![0.0; y.len()];
            atol[0] = 1e-3 * rtol;
            let solver = DoPri5 {
                tol: Tolerance { rtol, atol },
                h_max: 0.1,
                max_steps: 50_000_000,
            };
            let floor = cfg.gap_floor;
            let mut count = 0usize;
            let stats = solver.integrate(&mut f, 0.0, &y.clone(), cfg.t_end, dt, |t, yn| {
                if (1..yn.len()).any(|i| !(yn[i] > floor)) {
                    return Ok(false);
                }
                count += 1;
                if count % cfg.store_every == 0 || t >= cfg.t_end {
                    times.push(t);
                    let (x, g) = expand(yn);
                    positions.push(x);
                    gaps.push(g);
                }
                Ok(true)
            })?;
            step.steps = stats.accepted;
            step.rejected = stats.rejected;
        }
    }
    step.max_speed = field.max_speed;

    Ok(Trajectory {
        times,
        positions,
        gaps: Some(gaps),
        events: Vec::new(),
        meta: TrajectoryMeta {
            method: Method::Regularized,
            epsilon: Some(cfg.moll.epsilon()),
            mollifier: Some(cfg.moll.family()),
            quad_nodes: Some(cfg.moll.quad_nodes()),
            amplitudes: ens0.amplitudes().to_vec(),
            step,
            experimental_split_rule: false,
            label: ens0.label().to_string(),
        },
    })
}

/// Relative offsets `x_i − x_1` at sample `k`, from exact gaps when available.
pub(crate) fn offsets(traj: &Trajectory, k: usize) -> (f64, Vec<f64>) {
    let x = &traj.positions[k];
    match &traj.gaps {
        Some(g) => {
            let mut r = Vec::with_capacity(x.len());
            let mut acc = 0.0;
            r.push(0.0);
            for s in &g[k] {
                acc += s;
                r.push(acc);
            }
            (x[0], r)
        }
        None => (x[0], x.iter().map(|v| v - x[0]).collect()),
    }
}

/// Indices of stored samples covering `[lo, hi]`, including one neighbour on each side.
pub(crate) fn window(times: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let a = times.partition_point(|t| *t < lo).saturating_sub(1);
    let b = (times.partition_point(|t| *t <= hi) + 1).min(times.len());
    a..b
}

/// `E_{N,ε} = ⟨m^{N,ε} − m^N_ε, φ_t⟩ + ⟨U^N_ε m^{N,ε} − U^{N,ε} m^N_ε, φ_x⟩`, the
/// amount by which the regularized particles fail the weak form.
pub fn consistency_error(traj: &Trajectory, phi: &TestFunction, moll: &Mollifier) -> Result<f64> {
    let (t_lo, t_hi) = phi.t_support();
    if t_hi > traj.t_end() + 1e-12 {
        return Err(Error::Support(format!(
            "ends at t = {t_hi}, after the trajectory (t = {})",
            traj.t_end()
        )));
    }
    if t_hi <= traj.times[0] {
        return Ok(0.0);
    }
    let p = traj.amplitudes();
    let n = p.len();
    let range = window(&traj.times, t_lo.max(traj.times[0]), t_hi);
    let mut ts = Vec::with_capacity(range.len());
    let mut vals = Vec::with_capacity(range.len());
    for k in range {
        let t = traj.times[k];
        ts.push(t);
        let tf = phi.time_factor(t);
        if tf[0] == 0.0 && tf[1] == 0.0 {
            vals.push(0.0);
            continue;
        }
        let (x1, r) = offsets(traj, k);
        let mut acc = 0.0;
        for i in 0..n {
            let xi = x1 + r[i];
            let at = phi.derivs_with(xi, tf);
            let (mut smooth_t, mut flux) = (0.0, 0.0);
            for (delta, w) in moll.nodes() {
                let (mut a, mut b) = (0.0, 0.0);
                for j in 0..n {
                    let z = r[i] - r[j] - delta;
                    a += p[j] * moll.f1(-z);
                    b += p[j] * moll.f1(z);
                }
                let u = 4.0 * a * b;
                let d = phi.derivs_with(xi - delta, tf);
                smooth_t += w * d.t;
                flux += w * u * (d.x - at.x);
            }
            acc += p[i] * (smooth_t - at.t + flux);
        }
        vals.push(acc);
    }
    Ok(simpson(&ts, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ens(p: &[f64], x: &[f64]) -> PeakonEnsemble {
        PeakonEnsemble::new(p.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn one_peakon_speed() {
        let m = Mollifier::bump(0.02).unwrap();
        for (p, want) in [(1.0, 1.0 / 6.0), (2.0, 4.0 / 6.0)] {
            let v = velocity_field(&ens(&[p], &[0.4]), &m).unwrap();
            assert!((v[0] - want).abs() < 2e-3 * p * p, "{v:?}");
        }
    }

    #[test]
    fn symmetric_pair_moves_together() {
        let m = Mollifier::gaussian(0.1).unwrap();
        let v = velocity_field(&ens(&[1.0, 1.0], &[-0.7, 0.7]), &m).unwrap();
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-13);
    }

    #[test]
    fn gap_rates_match_velocity_differences() {
        let m = Mollifier::bump(0.1).unwrap();
        let e = ens(&[2.0, -0.5, 1.0], &[-0.3, 0.05, 0.6]);
        let v = velocity_field(&e, &m).unwrap();
        let mut field = GapField::new(&m, e.amplitudes());
        let y = [-0.3, 0.35, 0.55];
        let mut dy = [0.0; 3];
        field.eval(&y, &mut dy).unwrap();
        assert_abs_diff_eq!(dy[0], v[0], epsilon = 1e-14);
        assert_abs_diff_eq!(dy[1], v[1] - v[0], epsilon = 1e-13);
        assert_abs_diff_eq!(dy[2], v[2] - v[1], epsilon = 1e-13);
    }

    #[test]
    fn tiny_gap_rates_are_continuous() {
        // the quadrature branch and the subtraction branch agree across the switch
        let m = Mollifier::gaussian(0.05).unwrap();
        let p = [2.0, 1.0];
        let mut field = GapField::new(&m, &p);
        let s = field.small;
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        field.eval(&[0.0, s * (1.0 - 1e-9)], &mut lo).unwrap();
        field.eval(&[0.0, s * (1.0 + 1e-9)], &mut hi).unwrap();
        assert!((lo[1] - hi[1]).abs() < 1e-9 * lo[1].abs().max(1e-3), "{lo:?} {hi:?}");
    }

    #[test]
    fn auto_step() {
        assert_eq!(auto_dt(0.2), 1e-3);
        assert_eq!(auto_dt(0.01), 0.01 / 20.0);
    }
}
