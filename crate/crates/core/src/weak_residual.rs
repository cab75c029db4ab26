//! Checks whether a peakon trajectory is a weak solution.
//!
//! With `u = Σ p_i G(x − x_i(t))` the weak form is
//!
//! ```text
//! ℒ(u, φ) = ∫∫ u(φ_t − φ_txx) − ⅓u_x³φ_xx − ⅓u³φ_xxx + (u³ + u u_x²)φ_x dx dt,
//! ```
//!
//! and a weak solution has `ℒ(u, φ) + ∫φ(x, 0) dm₀ = 0` for every test function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::{kernel_g, kernel_gx, Mollifier};
use crate::limit_dynamics::crossing_rhs;
use crate::quadrature::{panels, simpson, Rule};
use crate::reg_dynamics::{offsets, window};
use crate::test_function::{PhiDerivs, TestFunction};
use crate::{Error, Result, Trajectory};

/// `D_i = F_i − ẋ_i`, with `F` the ordered velocities after sorting by position.
pub fn defect(positions: &[f64], amplitudes: &[f64], velocities: &[f64]) -> Result<Vec<f64>> {
    let n = positions.len();
    if amplitudes.len() != n || velocities.len() != n {
        return Err(Error::invalid("defect inputs differ in length"));
    }
    let mut sorted = positions.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(
            "coincident positions have no pointwise defect; use the quadrature residual",
        ));
    }
    let f = crossing_rhs(positions, amplitudes);
    Ok(f.iter().zip(velocities).map(|(f, v)| f - v).collect())
}

/// Which kernel builds `u` from the particle positions.
#[derive(Debug, Clone, Default)]
pub enum FieldKernel {
    /// `G(x) = ½e^{−|x|}`
    #[default]
    Limit,
    /// `G^ε = ρ_ε ∗ G`
    Mollified(Mollifier),
}

#[derive(Debug, Clone)]
pub struct ResidualOptions {
    /// Refinement levels `0..=levels`; level `ℓ` splits x-panels `2^ℓ` times and
    /// uses every `2^{levels−ℓ}`-th stored time.
    pub levels: usize,
    pub tolerance: f64,
    /// Levels whose value is this small count as decreasing regardless of the
    /// trend; a coarse level can land on a tiny value by cancellation.
    pub noise_floor: f64,
    pub kernel: FieldKernel,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            levels: 3,
            tolerance: 1e-4,
            noise_floor: 1e-8,
            kernel: FieldKernel::Limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithWeak,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiSummary {
    pub centers: [f64; 2],
    pub radii: [f64; 2],
}

impl From<&TestFunction> for PhiSummary {
    fn from(p: &TestFunction) -> Self {
        PhiSummary {
            centers: [p.x_center, p.t_center],
            radii: [p.x_radius, p.t_radius],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub phi: PhiSummary,
    /// `ℒ(u, φ) + ∫φ(x, 0) dm₀` at the finest level.
    pub value: f64,
    pub history: Vec<(usize, f64)>,
    /// `|value|` never grows from one level to the next (above the noise floor).
    pub decreasing: bool,
    /// The last increment is no larger than the one before it.
    pub converged: bool,
    pub verdict: Verdict,
}

const X_BASE_PANELS: usize = 8;

struct Field<'a> {
    kernel: &'a FieldKernel,
    x: Vec<f64>,
    p: &'a [f64],
}

impl Field<'_> {
    fn eval(&self, y: f64) -> (f64, f64) {
        let (mut u, mut ux) = (0.0, 0.0);
        match self.kernel {
            FieldKernel::Limit => {
                for (xi, p) in self.x.iter().zip(self.p) {
                    u += p * kernel_g(y - xi);
                    ux += p * kernel_gx(y - xi);
                }
            }
            FieldKernel::Mollified(m) => {
                for (xi, p) in self.x.iter().zip(self.p) {
                    let (a, b) = (m.f1(y - xi), m.f1(xi - y));
                    u += p * (a + b);
                    ux += p * (b - a);
                }
            }
        }
        (u, ux)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        // the bump's derivatives steepen toward the support edges, so the
        // coarsest level already uses several panels
        let mut b: Vec<f64> = (0..=X_BASE_PANELS)
            .map(|k| lo + (hi - lo) * k as f64 / X_BASE_PANELS as f64)
            .collect();
        b[X_BASE_PANELS] = hi;
        let mut add = |v: f64| {
            if v > lo && v < hi {
                b.push(v);
            }
        };
        for &xi in &self.x {
            add(xi);
            if let FieldKernel::Mollified(m) = self.kernel {
                for k in [1.0, 2.0, 4.0, 8.0] {
                    add(xi - k * m.epsilon());
                    add(xi + k * m.epsilon());
                }
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

fn integrand(u: f64, ux: f64, d: &PhiDerivs) -> f64 {
    let (u2, ux2) = (u * u, ux * ux);
    u * (d.t - d.txx) - ux2 * ux * d.xx / 3.0 - u2 * u * d.xxx / 3.0 + (u2 * u + u * ux2) * d.x
}

fn space_integral(traj: &Trajectory, k: usize, phi: &TestFunction, kernel: &FieldKernel, rule: &Rule, sub: usize) -> f64 {
    let tf = phi.time_factor(traj.times[k]);
    if tf == [0.0, 0.0] {
        return 0.0;
    }
    let x = match kernel {
        FieldKernel::Mollified(_) => {
            let (x1, r) = offsets(traj, k);
            r.iter().map(|r| x1 + r).collect()
        }
        FieldKernel::Limit => traj.positions[k].clone(),
    };
    let field = Field {
        kernel,
        x,
        p: traj.amplitudes(),
    };
    let (lo, hi) = phi.x_support();
    let breaks = field.breaks(lo, hi);
    panels(rule, &breaks, sub, |y| {
        let (u, ux) = field.eval(y);
        integrand(u, ux, &phi.derivs_with(y, tf))
    })
}

/// Drops interior samples that sit much closer to a neighbour than the typical
/// spacing, which events just off the step grid produce.
fn thin(idx: Vec<usize>, times: &[f64]) -> Vec<usize> {
    if idx.len() < 3 {
        return idx;
    }
    let mut h: Vec<f64> = idx.windows(2).map(|w| times[w[1]] - times[w[0]]).collect();
    h.sort_by(f64::total_cmp);
    let min_h = 0.25 * h[h.len() / 2];
    let last = *idx.last().unwrap();
    let mut out = vec![idx[0]];
    for &k in &idx[1..idx.len() - 1] {
        let prev = times[*out.last().unwrap()];
        if times[k] - prev >= min_h && times[last] - times[k] >= min_h {
            out.push(k);
        }
    }
    out.push(last);
    out
}

/// `ℒ(u, φ) + Σ p_i φ(x_i(0), 0)` under joint refinement in `x` and `t`.
pub fn weak_residual(traj: &Trajectory, phi: &TestFunction, opts: &ResidualOptions) -> Result<ResidualReport> {
    let (t_lo, t_hi) = phi.t_support();
    let t0 = traj.times[0];
    if t_hi > traj.t_end() + 1e-12 {
        return Err(Error::Support(format!(
            "ends at t = {t_hi}, after the trajectory (t = {})",
            traj.t_end()
        )));
    }
    let p = traj.amplitudes();
    let initial: f64 = traj.positions[0]
        .iter()
        .zip(p)
        .map(|(x, p)| p * phi.value(*x, t0))
        .sum();

    let range = if t_hi <= t0 { 0..0 } else { window(&traj.times, t_lo.max(t0), t_hi) };
    // segment boundaries: window ends and stored event times
    let mut cuts = vec![range.start];
    for ev in &traj.events {
        if let Ok(k) = traj.times.binary_search_by(|t| t.total_cmp(&ev.time)) {
            if k > range.start && k + 1 < range.end {
                cuts.push(k);
            }
        }
    }
    // order changes mark crossings, where the velocities have a kink
    let order = |k: usize| {
        let x = &traj.positions[k];
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        idx
    };
    let closest = |k: usize| {
        let mut x = traj.positions[k].clone();
        x.sort_by(f64::total_cmp);
        x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    };
    for k in range.start + 1..range.end {
        if order(k - 1) != order(k) {
            let c = if closest(k - 1) < closest(k) { k - 1 } else { k };
            if c > range.start && c + 1 < range.end {
                cuts.push(c);
            }
        }
    }
    cuts.push(range.end.saturating_sub(1));
    cuts.sort_unstable();
    cuts.dedup();

    let rule = Rule::legendre(16);
    let mut history = Vec::with_capacity(opts.levels + 1);
    for level in 0..=opts.levels {
        let stride = 1usize << (opts.levels - level);
        let sub = 1usize << level;
        let mut total = initial;
        if range.len() >= 2 {
            for seg in cuts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let idx = thin((a..b).step_by(stride).chain([b]).collect(), &traj.times);
                let ts: Vec<f64> = idx.iter().map(|&k| traj.times[k]).collect();
                let vals: Vec<f64> = idx
                    .iter()
                    .map(|&k| space_integral(traj, k, phi, &opts.kernel, &rule, sub))
                    .collect();
                total += simpson(&ts, &vals);
            }
        }
        history.push((level, total));
    }

    let floor = opts.noise_floor;
    let decreasing = history
        .windows(2)
        .all(|w| w[1].1.abs() <= w[0].1.abs() || w[1].1.abs() <= floor);
    let inc: Vec<f64> = history.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let converged = match inc.len() {
        0 => true,
        1 => inc[0] <= floor.max(1e-3 * history[1].1.abs()),
        n => inc[n - 1] <= inc[n - 2] || inc[n - 1] <= floor,
    };
    let value = history.last().unwrap().1;
    let verdict = if value.abs() <= opts.tolerance && decreasing {
        Verdict::ConsistentWithWeak
    } else {
        Verdict::Inconsistent
    };
    Ok(ResidualReport {
        phi: phi.into(),
        value,
        history,
        decreasing,
        converged,
        verdict,
    })
}

/// Residuals for many test functions, evaluated in parallel.
pub fn weak_residual_grid(
    traj: &Trajectory,
    phis: &[TestFunction],
    opts: &ResidualOptions,
) -> Result<Vec<ResidualReport>> {
    phis.par_iter().map(|phi| weak_residual(traj, phi, opts)).collect()
}

/// A 3×3 grid of bumps covering the region swept by the trajectory.
pub fn standard_bump_grid(traj: &Trajectory) -> Vec<TestFunction> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in traj.positions.iter().flatten() {
        lo = lo.min(*x);
        hi = hi.max(*x);
    }
    let width = hi - lo + 2.0;
    let t_end = traj.t_end();
    let mut out = Vec::with_capacity(9);
    for tc in [0.1, 0.5, 0.75] {
        for xc in [0.25, 0.5, 0.75] {
            out.push(TestFunction {
                x_center: lo - 1.0 + width * xc,
                x_radius: width / 3.0,
                t_center: t_end * tc,
                t_radius: t_end / 4.0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_dynamics::{label_ordered_rhs, ordered_rhs};
    use approx::assert_abs_diff_eq;

    #[test]
    fn defect_of_ordered_velocities_vanishes() {
        let x = [-1.0, 0.2, 0.3, 2.0];
        let p = [1.0, -2.0, 0.5, 3.0];
        let v = ordered_rhs(&x, &p).unwrap();
        for d in defect(&x, &p, &v).unwrap() {
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn unreordered_continuation_has_a_defect() {
        let (x, p) = ([0.5, 0.0], [2.0, 1.0]);
        let v = label_ordered_rhs(&x, &p);
        let d = defect(&x, &p, &v).unwrap();
        assert!(d.iter().all(|d| d.abs() > 0.1), "{d:?}");
        assert!(defect(&[0.0, 0.0], &p, &v).is_err());
    }
}
