//! Peakon approximations of measure-valued initial data.
//!
//! `[−L, L]` is cut into `N` half-open cells of width `h = 2L/N`; cell `i` becomes a
//! peakon at its center carrying the cell's mass.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::limit_dynamics::{integrate_limit, LimitDynConfig, LimitMode};
use crate::quadrature::Rule;
use crate::reg_dynamics::{integrate_regularized, RegDynConfig, StepSize};
use crate::{Error, Mollifier, PeakonEnsemble, Result, Trajectory};

/// Slack added to every bound check.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Density {
    /// Values on equal bins covering `[−L, L]`.
    pub values: Vec<f64>,
}

/// Atoms plus a piecewise-constant density, supported in `(−L, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct Measure1D {
    #[serde(rename = "L")]
    l: f64,
    atoms: Vec<(f64, f64)>,
    density: Density,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(rename = "L")]
    l: f64,
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    density: Density,
}

impl TryFrom<RawMeasure> for Measure1D {
    type Error = Error;
    fn try_from(r: RawMeasure) -> Result<Self> {
        Measure1D::new(r.l, r.atoms, r.density.values)
    }
}

impl Measure1D {
    pub fn new(l: f64, atoms: Vec<(f64, f64)>, density: Vec<f64>) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("L = {l} must be positive and finite")));
        }
        for &(x, w) in &atoms {
            if !x.is_finite() || !w.is_finite() {
                return Err(Error::invalid("atom location and weight must be finite"));
            }
            if x >= l {
                return Err(Error::invalid(format!(
                    "atom at {x} is not inside any half-open cell of [−{l}, {l})"
                )));
            }
            if x <= -l {
                return Err(Error::invalid(format!("atom at {x} lies outside (−{l}, {l})")));
            }
        }
        if density.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("density values must be finite"));
        }
        Ok(Measure1D {
            l,
            atoms,
            density: Density { values: density },
        })
    }

    /// Uniform density `value` on `[−L, L]`.
    pub fn uniform(l: f64, value: f64) -> Result<Self> {
        Measure1D::new(l, Vec::new(), vec![value])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Measure1D::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> &[f64] {
        &self.density.values
    }

    fn bin_width(&self) -> f64 {
        2.0 * self.l / self.density.values.len().max(1) as f64
    }

    /// `M₀ = |m₀|(ℝ)`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1.abs()).sum();
        let dens: f64 = self.density.values.iter().map(|v| v.abs()).sum();
        atoms + dens * self.bin_width()
    }

    /// `m₀(ℝ)`.
    pub fn total_mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1).sum();
        let dens: f64 = self.density.values.iter().sum();
        atoms + dens * self.bin_width()
    }

    /// `m₀([a, b))`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(x, _)| *x >= a && *x < b)
            .map(|a| a.1)
            .sum();
        let bw = self.bin_width();
        let dens: f64 = self
            .density
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let lo = -self.l + k as f64 * bw;
                let hi = if k + 1 == self.density.values.len() { self.l } else { lo + bw };
                v * (hi.min(b) - lo.max(a)).max(0.0)
            })
            .sum();
        atoms + dens
    }

    /// `∫f dm₀`, with 16-point Gauss–Legendre on each density bin.
    pub fn pair_with<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc: f64 = self.atoms.iter().map(|&(x, w)| w * f(x)).sum();
        let rule = Rule::legendre(16);
        let bw = self.bin_width();
        for (k, v) in self.density.values.iter().enumerate() {
            if *v != 0.0 {
                let lo = -self.l + k as f64 * bw;
                acc += v * rule.integrate(lo, lo + bw, &mut f);
            }
        }
        acc
    }
}

/// The cell centers and masses, and the ensemble made of the nonzero ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub ensemble: PeakonEnsemble,
    pub centers: Vec<f64>,
    pub masses: Vec<f64>,
    /// Cells with zero mass, left out of the ensemble.
    pub dropped: Vec<usize>,
}

impl Discretization {
    /// `∫f dm₀^N = Σ p_i f(c_i)`.
    pub fn pair_with<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.centers.iter().zip(&self.masses).map(|(c, p)| p * f(*c)).sum()
    }
}

pub fn discretize_measure(m0: &Measure1D, n: usize) -> Result<Discretization> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if let Some(&(x, _)) = m0.atoms.iter().find(|a| a.0 >= m0.l) {
        return Err(Error::invalid(format!("atom at {x} is not inside any half-open cell")));
    }
    let l = m0.l;
    let h = 2.0 * l / n as f64;
    let edge = |i: usize| if i == n { l } else { -l + i as f64 * h };
    let centers: Vec<f64> = (0..n).map(|i| -l + (i as f64 + 0.5) * h).collect();
    let masses: Vec<f64> = (0..n).map(|i| m0.mass_in(edge(i), edge(i + 1))).collect();
    let dropped: Vec<usize> = (0..n).filter(|&i| masses[i] == 0.0).collect();
    let (p, x): (Vec<f64>, Vec<f64>) = masses
        .iter()
        .zip(&centers)
        .filter(|(p, _)| **p != 0.0)
        .map(|(p, c)| (*p, *c))
        .unzip();
    if p.is_empty() {
        return Err(Error::invalid("every cell has zero mass"));
    }
    let ensemble = PeakonEnsemble::new(p, x)?.with_label(format!("N={n}"));
    Ok(Discretization {
        ensemble,
        centers,
        masses,
        dropped,
    })
}

/// Left and right exponential sums at each breakpoint:
/// `L_k = ½Σ_{x_j ≤ z_k} p_j e^{x_j − z_k}`, `R_k = ½Σ_{x_j ≥ z_k} p_j e^{z_k − x_j}`.
fn side_sums(z: &[f64], x: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let left = z
        .iter()
        .map(|zk| x.iter().zip(p).filter(|(x, _)| *x <= zk).map(|(x, p)| 0.5 * p * (x - zk).exp()).sum())
        .collect();
    let right = z
        .iter()
        .map(|zk| x.iter().zip(p).filter(|(x, _)| *x >= zk).map(|(x, p)| 0.5 * p * (zk - x).exp()).sum())
        .collect();
    (left, right)
}

/// `∫_0^d |a e^{−s} + b e^{s−d}| ds`, exact.
fn abs_exp_integral(a: f64, b: f64, d: f64) -> f64 {
    let prim = |s1: f64, s2: f64| a * ((-s1).exp() - (-s2).exp()) + b * ((s2 - d).exp() - (s1 - d).exp());
    let ratio = -a / b;
    if ratio > 0.0 && ratio.is_finite() {
        let root = 0.5 * (d + ratio.ln());
        if root > 0.0 && root < d {
            return prim(0.0, root).abs() + prim(root, d).abs();
        }
    }
    prim(0.0, d).abs()
}

/// `‖u − v‖_{L¹(ℝ)}` and `‖u_x − v_x‖_{L¹(ℝ)}` for two peakon fields.
///
/// Between consecutive peaks of either field the difference is `a e^{−s} + b e^{s−d}`,
/// so every panel and both tails integrate in closed form.
pub fn l1_distance(xa: &[f64], pa: &[f64], xb: &[f64], pb: &[f64]) -> (f64, f64) {
    let mut z: Vec<f64> = xa.iter().chain(xb).copied().collect();
    z.sort_by(f64::total_cmp);
    z.dedup();
    let (la, ra) = side_sums(&z, xa, pa);
    let (lb, rb) = side_sums(&z, xb, pb);
    let left: Vec<f64> = la.iter().zip(&lb).map(|(a, b)| a - b).collect();
    let right: Vec<f64> = ra.iter().zip(&rb).map(|(a, b)| a - b).collect();
    let k = z.len();
    // tails: u = R_0 e^{x − z_0} on the left, L_K e^{z_K − x} on the right, and |u_x| = |u| there
    let tails = right[0].abs() + left[k - 1].abs();
    let (mut du, mut dux) = (tails, tails);
    for i in 0..k - 1 {
        let d = z[i + 1] - z[i];
        du += abs_exp_integral(left[i], right[i + 1], d);
        dux += abs_exp_integral(-left[i], right[i + 1], d);
    }
    (du, dux)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub tv_u: f64,
    pub tv_ux: f64,
    pub sup_u: f64,
    pub sup_ux: f64,
    pub mass_signed: f64,
    pub mass_abs: f64,
    pub support_interval: [f64; 2],
    /// `L + ½M₀²t`
    pub support_bound: f64,
    pub tv_pass: bool,
    pub sup_pass: bool,
    pub mass_pass: bool,
    pub support_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzPair {
    pub s: f64,
    pub t: f64,
    pub l1_u: f64,
    pub l1_ux: f64,
    /// `½M₀³|t − s|`
    pub bound_u: f64,
    /// `M₀³|t − s|`
    pub bound_ux: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub l1_time_differences: Vec<LipschitzPair>,
    pub all_pass: bool,
}

impl DiagnosticsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,tv_u,tv_ux,sup_u,sup_ux,mass_signed,mass_abs,support_lo,support_hi,support_bound,pass\n",
        );
        for c in &self.checkpoints {
            let pass = c.tv_pass && c.sup_pass && c.mass_pass && c.support_pass;
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
                c.t,
                c.tv_u,
                c.tv_ux,
                c.sup_u,
                c.sup_ux,
                c.mass_signed,
                c.mass_abs,
                c.support_interval[0],
                c.support_interval[1],
                c.support_bound,
                pass
            ));
        }
        out
    }
}

/// BV, sup, mass, support and time-Lipschitz checks at the given times.
///
/// `l` and `m0_total` are the half-width and total variation of the initial measure;
/// `m0_signed` is its total mass.
pub fn diagnostics_with(
    traj: &Trajectory,
    l: f64,
    m0_total: f64,
    m0_signed: f64,
    times: &[f64],
) -> Result<DiagnosticsReport> {
    let p = traj.amplitudes();
    let states: Vec<(f64, Vec<f64>)> = times
        .iter()
        .map(|&t| traj.positions_at(t).map(|x| (t, x)))
        .collect::<Result<_>>()?;
    let bound = m0_total + BOUND_SLACK;
    let checkpoints: Vec<Checkpoint> = states
        .par_iter()
        .map(|(t, x)| {
            let st = crate::ensemble::field_stats(x, p);
            let mass_signed: f64 = p.iter().sum();
            let mass_abs: f64 = p.iter().map(|p| p.abs()).sum();
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let support_bound = l + 0.5 * m0_total * m0_total * t;
            Checkpoint {
                t: *t,
                tv_u: st.tv_u,
                tv_ux: st.tv_ux,
                sup_u: st.sup_u,
                sup_ux: st.sup_ux,
                mass_signed,
                mass_abs,
                support_interval: [lo, hi],
                support_bound,
                tv_pass: st.tv_u <= bound && st.tv_ux <= 2.0 * m0_total + BOUND_SLACK,
                sup_pass: st.sup_u <= 0.5 * m0_total + BOUND_SLACK
                    && st.sup_ux <= 0.5 * m0_total + BOUND_SLACK,
                mass_pass: mass_abs <= bound
                    && (mass_signed - m0_signed).abs() <= 1e-12 * m0_total.max(1.0),
                support_pass: lo.abs().max(hi.abs()) <= support_bound + BOUND_SLACK,
            }
        })
        .collect();
    let m3 = m0_total.powi(3);
    let l1_time_differences: Vec<LipschitzPair> = states
        .par_windows(2)
        .map(|w| {
            let ((s, xs), (t, xt)) = (&w[0], &w[1]);
            let (l1_u, l1_ux) = l1_distance(xs, p, xt, p);
            let dt = (t - s).abs();
            let (bound_u, bound_ux) = (0.5 * m3 * dt, m3 * dt);
            LipschitzPair {
                s: *s,
                t: *t,
                l1_u,
                l1_ux,
                bound_u,
                bound_ux,
                pass: l1_u <= bound_u + BOUND_SLACK && l1_ux <= bound_ux + BOUND_SLACK,
            }
        })
        .collect();
    let all_pass = checkpoints
        .iter()
        .all(|c| c.tv_pass && c.sup_pass && c.mass_pass && c.support_pass)
        && l1_time_differences.iter().all(|p| p.pass);
    Ok(DiagnosticsReport {
        l,
        m0: m0_total,
        checkpoints,
        l1_time_differences,
        all_pass,
    })
}

pub fn diagnostics(traj: &Trajectory, m0: &Measure1D, times: &[f64]) -> Result<DiagnosticsReport> {
    diagnostics_with(traj, m0.l, m0.total_variation(), m0.total_mass(), times)
}

/// Which dynamics a study runs.
#[derive(Debug, Clone)]
pub enum StudyMode {
    Limit { mode: LimitMode, dt: f64 },
    Regularized { moll: Mollifier, step: StepSize },
}

impl StudyMode {
    pub fn run(&self, ens: &PeakonEnsemble, t_end: f64) -> Result<Trajectory> {
        match self {
            StudyMode::Limit { mode, dt } => {
                let mut cfg = LimitDynConfig::new(*mode, t_end);
                cfg.dt = *dt;
                integrate_limit(ens, &cfg)
            }
            StudyMode::Regularized { moll, step } => {
                let mut cfg = RegDynConfig::new(moll.clone(), t_end);
                cfg.step = *step;
                integrate_regularized(ens, &cfg)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub n_next: usize,
    pub l1_u: f64,
    pub l1_ux: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub t_end: f64,
    pub rows: Vec<StudyRow>,
    /// Each `‖u^N − u^{N'}‖₁` is below the previous one (or the previous one is already zero).
    pub cauchy_decreasing: bool,
    #[serde(skip)]
    pub runs: Vec<(Discretization, Trajectory)>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,N_next,l1_u,l1_ux\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{:?}\n", r.n, r.n_next, r.l1_u, r.l1_ux));
        }
        out
    }
}

/// Runs every `N` in parallel and compares consecutive entries at `t_end`.
pub fn convergence_study(m0: &Measure1D, n_list: &[usize], mode: &StudyMode, t_end: f64) -> Result<ConvergenceStudy> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("N list must be strictly increasing"));
    }
    let runs: Vec<(Discretization, Trajectory)> = n_list
        .par_iter()
        .map(|&n| {
            let d = discretize_measure(m0, n)?;
            let traj = mode.run(&d.ensemble, t_end)?;
            Ok((d, traj))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<StudyRow> = runs
        .windows(2)
        .zip(n_list.windows(2))
        .map(|(r, n)| {
            let (a, b) = (&r[0].1, &r[1].1);
            let (l1_u, l1_ux) = l1_distance(a.final_positions(), a.amplitudes(), b.final_positions(), b.amplitudes());
            StudyRow {
                n: n[0],
                n_next: n[1],
                l1_u,
                l1_ux,
            }
        })
        .collect();
    let cauchy_decreasing = rows.windows(2).all(|w| w[1].l1_u < w[0].l1_u || w[0].l1_u <= 1e-14);
    Ok(ConvergenceStudy {
        t_end,
        rows,
        cauchy_decreasing,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{eval_u, eval_ux};
    use crate::quadrature::panels;
    use approx::assert_relative_eq;

    #[test]
    fn half_open_cells() {
        let m = Measure1D::new(1.0, vec![(0.0, 1.0)], vec![]).unwrap();
        let d = discretize_measure(&m, 2).unwrap();
        assert_eq!(d.masses, vec![0.0, 1.0]);
        assert_eq!(d.centers, vec![-0.5, 0.5]);
        assert_eq!(d.dropped, vec![0]);
        assert_eq!(d.ensemble.positions(), &[0.5]);
        assert!(Measure1D::new(1.0, vec![(1.0, 1.0)], vec![]).is_err());
    }

    #[test]
    fn uniform_cells() {
        let d = discretize_measure(&Measure1D::uniform(1.0, 0.5).unwrap(), 4).unwrap();
        assert_eq!(d.masses, vec![0.25; 4]);
        assert_eq!(d.centers, vec![-0.75, -0.25, 0.25, 0.75]);
    }

    #[test]
    fn l1_matches_quadrature() {
        let (xa, pa) = ([-0.3, 0.4, 1.0], [1.0, -0.5, 0.7]);
        let (xb, pb) = ([-0.2, 0.9], [0.8, 0.3]);
        let (du, dux) = l1_distance(&xa, &pa, &xb, &pb);
        let rule = Rule::legendre(20);
        let mut breaks = vec![-40.0, 40.0];
        breaks.extend(xa.iter().chain(&xb));
        breaks.sort_by(f64::total_cmp);
        let qu = panels(&rule, &breaks, 400, |y| (eval_u(&xa, &pa, y) - eval_u(&xb, &pb, y)).abs());
        let qux = panels(&rule, &breaks, 400, |y| (eval_ux(&xa, &pa, y) - eval_ux(&xb, &pb, y)).abs());
        assert_relative_eq!(du, qu, max_relative = 1e-7);
        assert_relative_eq!(dux, qux, max_relative = 1e-7);
    }

    #[test]
    fn json_round_trip() {
        let m = Measure1D::from_json(r#"{"L": 2.0, "atoms": [[0.5, 1.0]], "density": {"values": [0.1, 0.2]}}"#).unwrap();
        assert_relative_eq!(m.total_variation(), 1.0 + 0.3 * 2.0);
        let back = Measure1D::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(Measure1D::from_json(r#"{"L": 1.0, "atoms": [[1.0, 1.0]]}"#).is_err());
    }
}
