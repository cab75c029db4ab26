//! Smooth compactly supported test functions `φ(x, t) = B(ξ) B(τ)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `B(s) = exp(−1/(1 − s²))` on `|s| < 1` and its first three derivatives.
pub fn bump(s: f64) -> [f64; 4] {
    if s.abs() >= 1.0 {
        return [0.0; 4];
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    if b == 0.0 {
        return [0.0; 4];
    }
    let q2 = q * q;
    let q3 = q2 * q;
    let g1 = -2.0 * s / q2;
    let g2 = -2.0 / q2 - 8.0 * s * s / q3;
    let g3 = -24.0 * s / q3 - 48.0 * s * s * s / (q3 * q);
    [
        b,
        g1 * b,
        (g2 + g1 * g1) * b,
        (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * b,
    ]
}

/// The derivatives of `φ` the weak form needs, at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiDerivs {
    pub phi: f64,
    pub t: f64,
    pub x: f64,
    pub xx: f64,
    pub xxx: f64,
    pub txx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub x_center: f64,
    pub x_radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

impl TestFunction {
    pub fn new(x_center: f64, x_radius: f64, t_center: f64, t_radius: f64) -> Result<Self> {
        let ok = [x_center, x_radius, t_center, t_radius].iter().all(|v| v.is_finite())
            && x_radius > 0.0
            && t_radius > 0.0;
        if !ok {
            return Err(Error::invalid("test function needs finite centers and positive radii"));
        }
        Ok(TestFunction {
            x_center,
            x_radius,
            t_center,
            t_radius,
        })
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.x_center - self.x_radius, self.x_center + self.x_radius)
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.t_center - self.t_radius, self.t_center + self.t_radius)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        bump((x - self.x_center) / self.x_radius)[0] * bump((t - self.t_center) / self.t_radius)[0]
    }

    /// Time factor `[B(τ), B'(τ)/r_t]`, shared by every `x` at a fixed time.
    pub fn time_factor(&self, t: f64) -> [f64; 2] {
        let b = bump((t - self.t_center) / self.t_radius);
        [b[0], b[1] / self.t_radius]
    }

    /// All derivatives at `(x, t)` given the precomputed time factor.
    pub fn derivs_with(&self, x: f64, tf: [f64; 2]) -> PhiDerivs {
        let r = self.x_radius;
        let b = bump((x - self.x_center) / r);
        let (bx, bxx, bxxx) = (b[1] / r, b[2] / (r * r), b[3] / (r * r * r));
        PhiDerivs {
            phi: b[0] * tf[0],
            t: b[0] * tf[1],
            x: bx * tf[0],
            xx: bxx * tf[0],
            xxx: bxxx * tf[0],
            txx: bxx * tf[1],
        }
    }

    pub fn derivs(&self, x: f64, t: f64) -> PhiDerivs {
        self.derivs_with(x, self.time_factor(t))
    }
}
