//! The peakon kernel `G(x) = ½e^{−|x|}`, its mollifications and the split kernels.
//!
//! For a mollifier `ρ_ε(x) = ε⁻¹ρ(x/ε)` the mollified kernel factors as
//! `G^ε = f₁ + f₂` and `G_x^ε = f₂ − f₁` with
//!
//! ```text
//! f₁(x) = ½ ∫_{−∞}^{x} ρ_ε(y) e^{y−x} dy,    f₂(x) = f₁(−x).
//! ```
//!
//! Both families below evaluate `f₁` without quadrature at call time: the
//! Gaussian through `erfc`/`erfcx`, the polynomial bump through a Chebyshev
//! table of its truncated exponential moment.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use errorfunctions::RealErrorFunctions;
use serde::{Deserialize, Serialize};

use crate::quadrature::Rule;
use crate::{Error, Result};

pub const DEFAULT_QUAD_NODES: usize = 64;

/// `G(x) = ½e^{−|x|}`.
pub fn kernel_g(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// `G'(x) = −sgn(x)·½e^{−|x|}`, with `G'(0) = 0` by convention.
pub fn kernel_gx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x.signum() * 0.5 * (-x.abs()).exp()
    }
}

/// Shape of the unscaled mollifier `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierFamily {
    /// `(2π)^{−1/2} e^{−x²/2}`
    Gaussian,
    /// `c (1 − x²)⁴` on `[−1, 1]`, `c` fixed by unit mass.
    #[default]
    Bump,
}

impl MollifierFamily {
    pub fn name(self) -> &'static str {
        match self {
            MollifierFamily::Gaussian => "gaussian",
            MollifierFamily::Bump => "bump",
        }
    }
}

impl fmt::Display for MollifierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MollifierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MollifierFamily::Gaussian),
            "bump" => Ok(MollifierFamily::Bump),
            _ => Err(Error::invalid(format!("unknown mollifier family `{s}`"))),
        }
    }
}

/// Chebyshev interpolant of `J(u) = ∫_{−1}^{u} ρ(s) e^{εs} ds` on `[−1, 1]`.
#[derive(Debug)]
struct BumpMoment {
    coeffs: Vec<f64>,
    full: f64,
}

const CHEB_POINTS: usize = 48;

impl BumpMoment {
    fn new(eps: f64, c: f64, rule: &Rule) -> Self {
        let n = CHEB_POINTS;
        let integrand = |s: f64| bump_shape(s, c) * (eps * s).exp();
        let values: Vec<f64> = (0..n)
            .map(|j| {
                let theta = PI * (j as f64 + 0.5) / n as f64;
                rule.integrate(-1.0, theta.cos(), integrand)
            })
            .collect();
        let coeffs = (0..n)
            .map(|k| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
                    .sum();
                let c = 2.0 * s / n as f64;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        BumpMoment {
            coeffs,
            full: rule.integrate(-1.0, 1.0, integrand),
        }
    }

    fn eval(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.full;
        }
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.coeffs[0]
    }
}

fn bump_shape(s: f64, c: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        let q2 = q * q;
        c * q2 * q2
    }
}

/// An even, nonnegative, unit-mass mollifier `ρ_ε` together with its
/// quadrature rule for `ρ_ε`-weighted integrals.
///
/// Cheap to clone; the tables are shared.
#[derive(Clone)]
pub struct Mollifier {
    family: MollifierFamily,
    epsilon: f64,
    quad_nodes: usize,
    /// `∫ρ_ε(y) f(y) dy ≈ Σ weights[k]·f(offsets[k])`
    offsets: Arc<[f64]>,
    weights: Arc<[f64]>,
    bump_c: f64,
    moment: Option<Arc<BumpMoment>>,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("family", &self.family)
            .field("epsilon", &self.epsilon)
            .field("quad_nodes", &self.quad_nodes)
            .finish()
    }
}

impl Mollifier {
    pub fn new(family: MollifierFamily, epsilon: f64) -> Result<Self> {
        Self::with_nodes(family, epsilon, DEFAULT_QUAD_NODES)
    }

    pub fn with_nodes(family: MollifierFamily, epsilon: f64, quad_nodes: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if quad_nodes < 2 {
            return Err(Error::invalid("quad_nodes must be at least 2"));
        }
        match family {
            MollifierFamily::Gaussian => {
                let r = Rule::hermite(quad_nodes);
                let scale = SQRT_2 * epsilon;
                let offsets = r.nodes.iter().map(|t| scale * t).collect::<Vec<_>>();
                let weights = r.weights.iter().map(|w| w / PI.sqrt()).collect::<Vec<_>>();
                Ok(Mollifier {
                    family,
                    epsilon,
                    quad_nodes,
                    offsets: offsets.into(),
                    weights: weights.into(),
                    bump_c: 0.0,
                    moment: None,
                })
            }
            MollifierFamily::Bump => {
                let r = Rule::legendre(quad_nodes);
                let c = 1.0 / r.integrate(-1.0, 1.0, |s| bump_shape(s, 1.0));
                let offsets = r.nodes.iter().map(|s| epsilon * s).collect::<Vec<_>>();
                let weights = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(s, w)| w * bump_shape(*s, c))
                    .collect::<Vec<_>>();
                let inner = Rule::legendre(24);
                Ok(Mollifier {
                    family,
                    epsilon,
                    quad_nodes,
                    offsets: offsets.into(),
                    weights: weights.into(),
                    bump_c: c,
                    moment: Some(Arc::new(BumpMoment::new(epsilon, c, &inner))),
                })
            }
        }
    }

    pub fn gaussian(epsilon: f64) -> Result<Self> {
        Self::new(MollifierFamily::Gaussian, epsilon)
    }

    pub fn bump(epsilon: f64) -> Result<Self> {
        Self::new(MollifierFamily::Bump, epsilon)
    }

    pub fn family(&self) -> MollifierFamily {
        self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn quad_nodes(&self) -> usize {
        self.quad_nodes
    }

    /// `C₀ = ‖ρ‖_∞` of the unscaled profile.
    pub fn c0(&self) -> f64 {
        match self.family {
            MollifierFamily::Gaussian => 1.0 / (2.0 * PI).sqrt(),
            MollifierFamily::Bump => self.bump_c,
        }
    }

    /// Half-width of the support of `ρ_ε`, infinite for the Gaussian.
    pub fn support_radius(&self) -> f64 {
        match self.family {
            MollifierFamily::Gaussian => f64::INFINITY,
            MollifierFamily::Bump => self.epsilon,
        }
    }

    /// `ρ_ε(x)`.
    pub fn density(&self, x: f64) -> f64 {
        let s = x / self.epsilon;
        match self.family {
            MollifierFamily::Gaussian => (-0.5 * s * s).exp() / ((2.0 * PI).sqrt() * self.epsilon),
            MollifierFamily::Bump => bump_shape(s, self.bump_c) / self.epsilon,
        }
    }

    /// Offsets and weights of the rule: `∫ρ_ε(y) f(y) dy ≈ Σ w f(y)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.offsets.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn f1(&self, x: f64) -> f64 {
        let eps = self.epsilon;
        match &self.moment {
            None => {
                let z = (eps * eps - x) / (eps * SQRT_2);
                if z >= 0.0 {
                    let r = x / eps;
                    0.25 * (-0.5 * r * r).exp() * RealErrorFunctions::erfcx(z)
                } else {
                    0.25 * (0.5 * eps * eps - x).exp() * RealErrorFunctions::erfc(z)
                }
            }
            Some(m) => {
                if x <= -eps {
                    0.0
                } else {
                    0.5 * (-x).exp() * m.eval(x / eps)
                }
            }
        }
    }

    pub fn f2(&self, x: f64) -> f64 {
        self.f1(-x)
    }

    /// `f₁'(x) = ½ρ_ε(x) − f₁(x)`.
    pub fn f1_prime(&self, x: f64) -> f64 {
        0.5 * self.density(x) - self.f1(x)
    }

    /// `f₂'(x) = −½ρ_ε(x) + f₂(x)`.
    pub fn f2_prime(&self, x: f64) -> f64 {
        -self.f1_prime(-x)
    }

    /// `G^ε = ρ_ε ∗ G`.
    pub fn g(&self, x: f64) -> f64 {
        self.f1(x) + self.f1(-x)
    }

    /// `G_x^ε`.
    pub fn gx(&self, x: f64) -> f64 {
        self.f1(-x) - self.f1(x)
    }

    /// `∫ρ_ε(x − y) f(y) dy`.
    pub fn convolve<F: FnMut(f64) -> f64>(&self, mut f: F, x: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, (y, w)) in self.nodes().enumerate() {
            let v = f(x - y);
            if !v.is_finite() {
                return Err(Error::non_finite(format!(
                    "mollifier convolution at x = {x}, node {k}"
                )));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// [`convolve`](Self::convolve) for an `f` with kinks: Gauss–Legendre on each
    /// piece of the (truncated) support of `ρ_ε(x − ·)` between the `breaks`.
    pub fn convolve_with_breaks<F: FnMut(f64) -> f64>(&self, mut f: F, x: f64, breaks: &[f64]) -> Result<f64> {
        let r = match self.family {
            MollifierFamily::Gaussian => 12.0 * self.epsilon,
            MollifierFamily::Bump => self.epsilon,
        };
        let mut cuts = vec![x - r, x + r];
        cuts.extend(breaks.iter().copied().filter(|b| (b - x).abs() < r));
        cuts.sort_by(f64::total_cmp);
        let rule = Rule::legendre(self.quad_nodes);
        let mut bad = None;
        let v = crate::quadrature::panels(&rule, &cuts, 1, |y| {
            let v = f(y);
            if !v.is_finite() {
                bad = Some(y);
            }
            self.density(x - y) * v
        });
        match bad {
            Some(y) => Err(Error::non_finite(format!("mollifier convolution at x = {x}, y = {y}"))),
            None => Ok(v),
        }
    }

    /// `I_ε = (ρ_ε ∗ (G_x^ε)²)(0)`, which tends to `1/12`.
    pub fn gx_square_at_zero(&self) -> f64 {
        self.nodes()
            .map(|(y, w)| {
                let g = self.gx(y);
                w * g * g
            })
            .sum()
    }

    /// `4∫ρ_ε(x)[f₁f₂(x) − f₁f₂(s + x)] dx`, which tends to `1/6` for every `s > 0`.
    pub fn pair_speed_integral(&self, s: f64) -> f64 {
        let ff = |x: f64| self.f1(x) * self.f2(x);
        4.0 * self.nodes().map(|(y, w)| w * (ff(y) - ff(s + y))).sum::<f64>()
    }

    /// `∫ρ(x) ∫_{x+δ/ε}^∞ ρ(y) dy dx`, the bound on the `s`-dependent part of
    /// [`pair_speed_integral`](Self::pair_speed_integral) for `s ≥ δ`.
    pub fn pair_tail_bound(&self, delta: f64) -> f64 {
        let shift = delta / self.epsilon;
        match self.family {
            MollifierFamily::Gaussian => 0.5 * RealErrorFunctions::erfc(0.5 * shift),
            MollifierFamily::Bump => {
                if shift >= 2.0 {
                    return 0.0;
                }
                let r = Rule::legendre(32);
                let c = self.bump_c;
                r.integrate(-1.0, 1.0, |x| {
                    let lo = x + shift;
                    if lo >= 1.0 {
                        0.0
                    } else {
                        bump_shape(x, c) * r.integrate(lo, 1.0, |y| bump_shape(y, c))
                    }
                })
            }
        }
    }
}

/// `G^ε(x)`.
pub fn kernel_g_eps(x: f64, moll: &Mollifier) -> f64 {
    moll.g(x)
}

/// `G_x^ε(x)`.
pub fn kernel_gx_eps(x: f64, moll: &Mollifier) -> f64 {
    moll.gx(x)
}

pub fn f1(x: f64, moll: &Mollifier) -> f64 {
    moll.f1(x)
}

pub fn f2(x: f64, moll: &Mollifier) -> f64 {
    moll.f2(x)
}

pub fn convolve_with_mollifier<F: FnMut(f64) -> f64>(f: F, x: f64, moll: &Mollifier) -> Result<f64> {
    moll.convolve(f, x)
}

pub fn mollified_gx_square_at_zero(moll: &Mollifier) -> f64 {
    moll.gx_square_at_zero()
}

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;
