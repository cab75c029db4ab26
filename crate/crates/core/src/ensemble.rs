//! The N-peakon state `u(x) = Σ p_i G(x − x_i)` and its scalar diagnostics.

use serde::{Deserialize, Serialize};

use crate::kernels::{kernel_g, kernel_gx};
use crate::{Error, Result};

/// Amplitudes and positions of N peakons.
///
/// Amplitudes are nonzero and never change under the mCH dynamics; positions
/// are whatever the caller supplies and are only checked by the operations
/// that need an ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakonEnsemble {
    amplitudes: Vec<f64>,
    positions: Vec<f64>,
    #[serde(default)]
    label: String,
    m0: f64,
}

impl PeakonEnsemble {
    pub fn new(amplitudes: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one peakon"));
        }
        if amplitudes.len() != positions.len() {
            return Err(Error::invalid(format!(
                "{} amplitudes but {} positions",
                amplitudes.len(),
                positions.len()
            )));
        }
        if let Some(i) = amplitudes.iter().position(|p| *p == 0.0 || !p.is_finite()) {
            return Err(Error::invalid(format!(
                "amplitude {} is {}, must be finite and nonzero",
                i + 1,
                amplitudes[i]
            )));
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("position {} is not finite", i + 1)));
        }
        let m0 = amplitudes.iter().map(|p| p.abs()).sum();
        Ok(PeakonEnsemble {
            amplitudes,
            positions,
            label: String::new(),
            m0,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same amplitudes, new positions.
    pub fn with_positions(&self, positions: Vec<f64>) -> Result<Self> {
        let mut next = PeakonEnsemble::new(self.amplitudes.clone(), positions)?;
        next.label = self.label.clone();
        Ok(next)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `M₀ = Σ|p_i|`.
    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.positions.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.positions.windows(2).all(|w| w[0] < w[1])
    }

    pub fn eval_u(&self, x: f64) -> f64 {
        eval_u(&self.positions, &self.amplitudes, x)
    }

    pub fn eval_ux(&self, x: f64) -> f64 {
        eval_ux(&self.positions, &self.amplitudes, x)
    }

    /// `H₀ = Σ_{i,j} p_i p_j G(x_i − x_j)`; a diagnostic only, not conserved for N ≥ 2.
    pub fn mch_h0(&self) -> f64 {
        let (p, x) = (&self.amplitudes, &self.positions);
        let mut acc = 0.0;
        for i in 0..p.len() {
            for j in 0..p.len() {
                acc += p[i] * p[j] * kernel_g(x[i] - x[j]);
            }
        }
        acc
    }

    /// `ℋ = Σ_{i<j} p_i p_j e^{x_i − x_j}` for nondecreasing positions.
    pub fn hamiltonian(&self) -> Result<f64> {
        if !self.is_nondecreasing() {
            return Err(Error::invalid("the Hamiltonian needs nondecreasing positions"));
        }
        let (p, x) = (&self.amplitudes, &self.positions);
        let mut acc = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                acc += p[i] * p[j] * (x[i] - x[j]).exp();
            }
        }
        Ok(acc)
    }

    /// `A ∇ℋ` with `A = (−½ above, ½ below the diagonal)`: the interaction part
    /// of the ordered peakon velocities, `ẋ_i − p_i²/6`.
    pub fn hamiltonian_flow(&self) -> Result<Vec<f64>> {
        if !self.is_nondecreasing() {
            return Err(Error::invalid("the Hamiltonian needs nondecreasing positions"));
        }
        let (p, x) = (&self.amplitudes, &self.positions);
        let n = p.len();
        let grad: Vec<f64> = (0..n)
            .map(|k| {
                let mut g = 0.0;
                for j in 0..n {
                    if j > k {
                        g += p[k] * p[j] * (x[k] - x[j]).exp();
                    } else if j < k {
                        g -= p[j] * p[k] * (x[j] - x[k]).exp();
                    }
                }
                g
            })
            .collect();
        Ok((0..n)
            .map(|i| {
                let below: f64 = grad[..i].iter().sum();
                let above: f64 = grad[i + 1..].iter().sum();
                0.5 * below - 0.5 * above
            })
            .collect())
    }

    /// Exact variation and sup norms of `u` and `u_x`.
    pub fn field_stats(&self) -> FieldStats {
        field_stats(&self.positions, &self.amplitudes)
    }
}

/// `u(x) = Σ p_i G(x − x_i)`.
pub fn eval_u(positions: &[f64], amplitudes: &[f64], x: f64) -> f64 {
    positions
        .iter()
        .zip(amplitudes)
        .map(|(xi, p)| p * kernel_g(x - xi))
        .sum()
}

/// `u_x(x)`; a peak sitting exactly at `x` contributes nothing.
pub fn eval_ux(positions: &[f64], amplitudes: &[f64], x: f64) -> f64 {
    positions
        .iter()
        .zip(amplitudes)
        .map(|(xi, p)| p * kernel_gx(x - xi))
        .sum()
}

/// `ℋ` written in the comoving coordinates `x̃_i = x_i − p_i² t / 6`.
pub fn hamiltonian_comoving(tilde: &[f64], amplitudes: &[f64], t: f64) -> f64 {
    let p = amplitudes;
    let mut acc = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            acc += p[i] * p[j] * ((p[i] * p[i] - p[j] * p[j]) * t / 6.0 + tilde[i] - tilde[j]).exp();
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub tv_u: f64,
    pub tv_ux: f64,
    pub sup_u: f64,
    pub sup_ux: f64,
}

/// Collapses coincident positions and sorts; returns distinct positions and summed amplitudes.
pub(crate) fn merged_peaks(positions: &[f64], amplitudes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..positions.len()).collect();
    idx.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    let mut y: Vec<f64> = Vec::with_capacity(idx.len());
    let mut q: Vec<f64> = Vec::with_capacity(idx.len());
    for i in idx {
        match y.last() {
            Some(&last) if last == positions[i] => *q.last_mut().unwrap() += amplitudes[i],
            _ => {
                y.push(positions[i]);
                q.push(amplitudes[i]);
            }
        }
    }
    (y, q)
}

/// Exact variation and sup norms, from the explicit form between peaks:
/// on `(y_k, y_{k+1})`, `u = α e^{−s} + β e^{s−d}` with `s = x − y_k`, `d = y_{k+1} − y_k`.
pub fn field_stats(positions: &[f64], amplitudes: &[f64]) -> FieldStats {
    let (y, q) = merged_peaks(positions, amplitudes);
    let n = y.len();
    // a[k]: ½Σ_{j≤k} q_j e^{y_j−y_k};  b[k]: ½Σ_{j≥k} q_j e^{y_k−y_j}
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 0..n {
        a[k] = 0.5 * q[k] + if k > 0 { a[k - 1] * (y[k - 1] - y[k]).exp() } else { 0.0 };
    }
    for k in (0..n).rev() {
        b[k] = 0.5 * q[k] + if k + 1 < n { b[k + 1] * (y[k] - y[k + 1]).exp() } else { 0.0 };
    }
    let u_at: Vec<f64> = (0..n).map(|k| a[k] + b[k] - 0.5 * q[k]).collect();

    let mut tv_u = b[0].abs() + a[n - 1].abs();
    // u_x(y_0−) = b[0], u_x(y_{n−1}+) = −a[n−1]
    let mut tv_ux = b[0].abs() + a[n - 1].abs();
    let mut sup_u = u_at.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sup_ux = b[0].abs().max(a[n - 1].abs());
    let mut ux_left = b[0];

    for k in 0..n.saturating_sub(1) {
        let d = y[k + 1] - y[k];
        let (al, be) = (a[k], b[k + 1]);
        let ed = (-d).exp();
        let u0 = u_at[k];
        let u1 = u_at[k + 1];
        let ux0 = -al + be * ed;
        let ux1 = -al * ed + be;
        tv_ux += (ux0 - ux_left).abs();
        sup_ux = sup_ux.max(ux0.abs()).max(ux1.abs());
        ux_left = ux1;

        // interior critical point of αe^{−s} + βe^{s−d}
        let crit = |ratio: f64| -> Option<f64> {
            if ratio > 0.0 {
                let s = 0.5 * (d + ratio.ln());
                (s > 0.0 && s < d).then_some(s)
            } else {
                None
            }
        };
        match crit(al / be) {
            Some(s) => {
                let um = al * (-s).exp() + be * (s - d).exp();
                tv_u += (um - u0).abs() + (u1 - um).abs();
                sup_u = sup_u.max(um.abs());
            }
            None => tv_u += (u1 - u0).abs(),
        }
        match crit(-al / be) {
            Some(s) => {
                let m = -al * (-s).exp() + be * (s - d).exp();
                tv_ux += (m - ux0).abs() + (ux1 - m).abs();
                sup_ux = sup_ux.max(m.abs());
            }
            None => tv_ux += (ux1 - ux0).abs(),
        }
    }
    tv_ux += (-a[n - 1] - ux_left).abs();
    FieldStats {
        tv_u,
        tv_ux,
        sup_u,
        sup_ux,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ens(p: &[f64], x: &[f64]) -> PeakonEnsemble {
        PeakonEnsemble::new(p.to_vec(), x.to_vec()).unwrap()
    }

    #[test]
    fn field_values() {
        assert_eq!(ens(&[1.0], &[0.0]).eval_u(0.0), 0.5);
        let e = ens(&[1.0, -1.0], &[0.0, 0.0]);
        for x in [-1.0, 0.0, 2.5] {
            assert_eq!(e.eval_u(x), 0.0);
        }
        assert_abs_diff_eq!(
            ens(&[2.0, 1.0], &[0.0, 1.0]).eval_u(0.0),
            1.0 + 0.5 * (-1f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(ens(&[1.0], &[0.0]).eval_ux(1.0), -0.5 * (-1f64).exp(), epsilon = 1e-16);
        assert_eq!(ens(&[1.0], &[0.0]).eval_ux(0.0), 0.0);
        assert_eq!(ens(&[1.0, 1.0], &[-1.0, 1.0]).eval_ux(0.0), 0.0);
    }

    #[test]
    fn scalar_diagnostics() {
        assert_eq!(ens(&[1.0], &[3.0]).mch_h0(), 0.5);
        assert_eq!(ens(&[1.0, 1.0], &[0.0, 0.0]).mch_h0(), 2.0);
        assert_eq!(ens(&[1.0], &[0.0]).hamiltonian().unwrap(), 0.0);
        assert_eq!(ens(&[1.0, 1.0], &[0.0, 0.0]).hamiltonian().unwrap(), 1.0);
        assert_abs_diff_eq!(
            ens(&[2.0, 1.0], &[0.0, 1.0]).hamiltonian().unwrap(),
            2.0 * (-1f64).exp(),
            epsilon = 1e-15
        );
        assert!(ens(&[2.0, 1.0], &[1.0, 0.0]).hamiltonian().is_err());
    }

    #[test]
    fn comoving_form_agrees() {
        let p = [1.5, -0.7, 2.0];
        let x = [-1.0, 0.2, 0.9];
        let t = 0.8;
        let tilde: Vec<f64> = x.iter().zip(&p).map(|(x, p)| x - p * p * t / 6.0).collect();
        let h = ens(&p, &x).hamiltonian().unwrap();
        assert_abs_diff_eq!(hamiltonian_comoving(&tilde, &p, t), h, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PeakonEnsemble::new(vec![], vec![]).is_err());
        assert!(PeakonEnsemble::new(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(PeakonEnsemble::new(vec![1.0], vec![0.0, 1.0]).is_err());
        assert!(PeakonEnsemble::new(vec![1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn single_peak_variation() {
        let s = ens(&[1.0], &[0.3]).field_stats();
        assert_abs_diff_eq!(s.tv_u, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.tv_ux, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sup_u, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sup_ux, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn variation_matches_dense_sampling() {
        let e = ens(&[1.0, -2.0, 0.5, 1.5], &[-2.0, -0.5, 0.0, 1.7]);
        let s = e.field_stats();
        let n = 400_000;
        let (lo, hi) = (-40.0, 40.0);
        let h = (hi - lo) / n as f64;
        // peaks are bracketed closely so each jump is sampled on both sides
        let mut xs: Vec<f64> = (0..=n).map(|k| lo + h * k as f64 + 1e-7).collect();
        for x in e.positions() {
            xs.push(x - 1e-11);
            xs.push(x + 1e-11);
        }
        xs.sort_by(f64::total_cmp);
        let (mut tv, mut tvx) = (0.0, 0.0);
        let mut prev = e.eval_u(xs[0]);
        let mut prevx = e.eval_ux(xs[0]);
        let (mut sup, mut supx) = (0.0f64, 0.0f64);
        for &x in &xs[1..] {
            let (u, ux) = (e.eval_u(x), e.eval_ux(x));
            tv += (u - prev).abs();
            tvx += (ux - prevx).abs();
            sup = sup.max(u.abs());
            supx = supx.max(ux.abs());
            prev = u;
            prevx = ux;
        }
        assert_abs_diff_eq!(s.tv_u, tv, epsilon = 1e-6);
        assert_abs_diff_eq!(s.tv_ux, tvx, epsilon = 1e-6);
        assert_abs_diff_eq!(s.sup_u, sup, epsilon = 1e-6);
        assert_abs_diff_eq!(s.sup_ux, supx, epsilon = 1e-4);
        assert!(s.tv_u <= e.m0() && s.tv_ux <= 2.0 * e.m0());
    }
}
