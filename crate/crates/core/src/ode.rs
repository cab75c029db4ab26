//! Explicit Runge–Kutta steppers shared by every integrator in the crate.

use crate::{Error, Result};

/// Classical fourth-order Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Derivative at the start of the last step.
    pub fn first_stage(&self) -> &[f64] {
        &self.k1
    }

    /// Advances `y` by `h`, writing into `out`. `f(t, y, dy)` fills `dy`.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, out: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        if self.k1.len() != n {
            *self = Rk4::new(n);
        }
        f(t, y, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            out[i] = y[i] + h / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("RK4 step at t = {t}")));
        }
        Ok(())
    }
}

/// Tolerances for [`DoPri5`].
#[derive(Debug, Clone)]
pub struct Tolerance {
    pub rtol: f64,
    /// Per-component absolute tolerance; a single entry applies to every component.
    pub atol: Vec<f64>,
}

impl Tolerance {
    fn scale(&self, i: usize, a: f64, b: f64) -> f64 {
        let atol = if self.atol.len() == 1 { self.atol[0] } else { self.atol[i] };
        atol + self.rtol * a.abs().max(b.abs())
    }
}

/// Dormand–Prince 5(4) with standard step-size control.
#[derive(Debug, Clone)]
pub struct DoPri5 {
    pub tol: Tolerance,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Counters from an adaptive run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

impl DoPri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        DoPri5 {
            tol: Tolerance {
                rtol,
                atol: vec![atol],
            },
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }

    /// Integrates from `t0` to `t_end`, calling `accept(t, y)` after every accepted step.
    /// `accept` may veto a step by returning `Ok(false)`, which halves the step and retries.
    pub fn integrate<F, A>(
        &self,
        f: &mut F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        h0: f64,
        mut accept: A,
    ) -> Result<AdaptiveStats>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
        A: FnMut(f64, &[f64]) -> Result<bool>,
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut y5 = vec![0.0; n];
        let mut t = t0;
        let mut h = h0.min(self.h_max).min(t_end - t0);
        let mut stats = AdaptiveStats::default();
        f(t, &y, &mut k[0])?;
        while t < t_end {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::non_finite(format!(
                    "adaptive integration exceeded {} steps at t = {t}",
                    self.max_steps
                )));
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let stage = |tmp: &mut [f64], k: &[Vec<f64>], c: &[f64]| {
                for i in 0..n {
                    let mut s = 0.0;
                    for (j, cj) in c.iter().enumerate() {
                        s += cj * k[j][i];
                    }
                    tmp[i] = y[i] + h * s;
                }
            };
            stage(&mut tmp, &k, &[A21]);
            f(t + h / 5.0, &tmp, &mut k[1])?;
            stage(&mut tmp, &k, &[A31, A32]);
            f(t + 0.3 * h, &tmp, &mut k[2])?;
            stage(&mut tmp, &k, &[A41, A42, A43]);
            f(t + 0.8 * h, &tmp, &mut k[3])?;
            stage(&mut tmp, &k, &[A51, A52, A53, A54]);
            f(t + 8.0 / 9.0 * h, &tmp, &mut k[4])?;
            stage(&mut tmp, &k, &[A61, A62, A63, A64, A65]);
            f(t + h, &tmp, &mut k[5])?;
            stage(&mut y5, &k, &[B1, 0.0, B3, B4, B5, B6]);
            f(t + h, &y5, &mut k[6])?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = self.tol.scale(i, y[i], y5[i]);
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.25;
                stats.rejected += 1;
                continue;
            }
            if err <= 1.0 {
                let t_next = if last { t_end } else { t + h };
                if !accept(t_next, &y5)? {
                    h *= 0.5;
                    stats.rejected += 1;
                    continue;
                }
                t = t_next;
                y.copy_from_slice(&y5);
                let (a, b) = k.split_at_mut(6);
                a[0].copy_from_slice(&b[0]);
                stats.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (h * fac).min(self.h_max);
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                stats.rejected += 1;
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::non_finite(format!("adaptive step underflow at t = {t}")));
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut rk = Rk4::new(2);
            let mut y = vec![1.0, 0.0];
            let mut out = vec![0.0; 2];
            for k in 0..n {
                rk.step(&mut osc, k as f64 * h, &y, h, &mut out).unwrap();
                y.copy_from_slice(&out);
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn dopri_reaches_tolerance() {
        let mut last = vec![0.0; 2];
        let stats = DoPri5::new(1e-10, 1e-12)
            .integrate(&mut osc, 0.0, &[1.0, 0.0], 10.0, 0.1, |_, y| {
                last.copy_from_slice(y);
                Ok(true)
            })
            .unwrap();
        assert!((last[0] - 10f64.cos()).abs() < 1e-8);
        assert!(stats.accepted > 10);
    }
}
