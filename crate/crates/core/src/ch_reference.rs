//! The classical Camassa–Holm peakon system, whose Hamiltonian is conserved.
//! Used to validate the shared RK4 core.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ode::Rk4;
use crate::{Error, Result};

/// Positions and (time-dependent) amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChState {
    pub positions: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl ChState {
    pub fn new(positions: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if positions.len() != amplitudes.len() || positions.is_empty() {
            return Err(Error::invalid("CH state needs matching, nonempty positions and amplitudes"));
        }
        if positions.iter().chain(&amplitudes).any(|v| !v.is_finite()) {
            return Err(Error::invalid("CH state entries must be finite"));
        }
        Ok(ChState {
            positions,
            amplitudes,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn rhs_into(x: &[f64], p: &[f64], dx: &mut [f64], dp: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let (mut sx, mut sp) = (0.0, 0.0);
        for j in 0..n {
            let d = x[i] - x[j];
            let e = (-d.abs()).exp();
            sx += p[j] * e;
            if d != 0.0 {
                sp += p[j] * d.signum() * e;
            }
        }
        dx[i] = sx;
        dp[i] = p[i] * sp;
    }
}

/// `ẋ_i = Σ_j p_j e^{−|x_i−x_j|}`, `ṗ_i = Σ_j p_i p_j sgn(x_i − x_j) e^{−|x_i−x_j|}`.
pub fn ch_rhs(state: &ChState) -> (Vec<f64>, Vec<f64>) {
    let n = state.len();
    let (mut dx, mut dp) = (vec![0.0; n], vec![0.0; n]);
    rhs_into(&state.positions, &state.amplitudes, &mut dx, &mut dp);
    (dx, dp)
}

/// `ℋ₀ = ½ Σ_{i,j} p_i p_j e^{−|x_i − x_j|}`.
pub fn ch_hamiltonian(state: &ChState) -> f64 {
    let (x, p) = (&state.positions, &state.amplitudes);
    let mut acc = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            acc += p[i] * p[j] * (-(x[i] - x[j]).abs()).exp();
        }
    }
    0.5 * acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ChState>,
    /// `max_t |ℋ₀(t) − ℋ₀(0)| / |ℋ₀(0)|`
    #[serde(rename = "H0_drift")]
    pub h0_drift: f64,
    /// `max_t |Σp(t) − Σp(0)|`
    pub momentum_drift: f64,
}

impl ChTrajectory {
    /// CSV with header `t,x1..xN,p1..pN`.
    pub fn to_csv(&self) -> String {
        let n = self.states[0].len();
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",x{i}");
        }
        for i in 1..=n {
            let _ = write!(s, ",p{i}");
        }
        s.push('\n');
        for (t, st) in self.times.iter().zip(&self.states) {
            let _ = write!(s, "{t:?}");
            for v in st.positions.iter().chain(&st.amplitudes) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// Fixed-step RK4. Aborts if ℋ₀ drifts by more than `10⁻⁶` relative, or if
/// positive-amplitude peakons lose their order.
pub fn integrate_ch(state0: &ChState, dt: f64, t_end: f64, store_every: usize) -> Result<ChTrajectory> {
    if !(dt > 0.0 && t_end > 0.0) || store_every == 0 {
        return Err(Error::invalid("dt, t_end and store_every must be positive"));
    }
    let n = state0.len();
    let positive = state0.amplitudes.iter().all(|p| *p > 0.0);
    let ordered = |x: &[f64]| x.windows(2).all(|w| w[0] < w[1]);
    let check_order = positive && ordered(&state0.positions);
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (x, p) = y.split_at(n);
        let (dx, dp) = dy.split_at_mut(n);
        rhs_into(x, p, dx, dp);
        Ok(())
    };
    let h0 = ch_hamiltonian(state0);
    let m0: f64 = state0.amplitudes.iter().sum();
    let mut y: Vec<f64> = state0.positions.iter().chain(&state0.amplitudes).copied().collect();
    let mut next = y.clone();
    let mut rk = Rk4::new(2 * n);
    let nsteps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut out = ChTrajectory {
        times: vec![0.0],
        states: vec![state0.clone()],
        h0_drift: 0.0,
        momentum_drift: 0.0,
    };
    for k in 0..nsteps {
        let t = k as f64 * dt;
        let t_next = if k + 1 == nsteps { t_end } else { (k + 1) as f64 * dt };
        rk.step(&mut f, t, &y, t_next - t, &mut next)?;
        std::mem::swap(&mut y, &mut next);
        let st = ChState {
            positions: y[..n].to_vec(),
            amplitudes: y[n..].to_vec(),
        };
        if check_order && !ordered(&st.positions) {
            return Err(Error::OrderingViolation {
                step: k + 1,
                time: t_next,
                index: st.positions.windows(2).position(|w| w[0] >= w[1]).unwrap_or(0) + 1,
                gap: 0.0,
            });
        }
        let dh = ((ch_hamiltonian(&st) - h0) / h0.abs().max(f64::MIN_POSITIVE)).abs();
        if dh > 1e-6 {
            return Err(Error::Drift {
                time: t_next,
                quantity: "H0",
                drift: dh,
            });
        }
        let m: f64 = st.amplitudes.iter().sum();
        out.h0_drift = out.h0_drift.max(dh);
        out.momentum_drift = out.momentum_drift.max((m - m0).abs());
        if (k + 1) % store_every == 0 || k + 1 == nsteps {
            out.times.push(t_next);
            out.states.push(st);
        }
    }
    Ok(out)
}
