//! Fixed quadrature rules and a few composite integrators.

use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Nodes and weights of a one-dimensional rule, sorted by node.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Rule { nodes, weights }
    }

    /// Gauss–Legendre rule on `[-1, 1]`.
    pub fn legendre(n: usize) -> Self {
        let n = NonZeroUsize::new(n.max(2)).expect("nonzero");
        Self::from_pairs(GaussLegendre::new(n).as_node_weight_pairs().to_vec())
    }

    /// Gauss–Hermite rule for the weight `e^{-t²}`.
    pub fn hermite(n: usize) -> Self {
        let n = NonZeroUsize::new(n.max(2)).expect("nonzero");
        Self::from_pairs(GaussHermite::new(n).as_node_weight_pairs().to_vec())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies a Legendre rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * t);
        }
        acc * half
    }
}

/// Integrates over consecutive breakpoints, splitting every panel into `sub` equal pieces.
///
/// Breakpoints must be nondecreasing; empty panels are skipped.
pub fn panels<F: FnMut(f64) -> f64>(rule: &Rule, breaks: &[f64], sub: usize, mut f: F) -> f64 {
    let sub = sub.max(1);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / sub as f64;
        for k in 0..sub {
            let lo = a + h * k as f64;
            let hi = if k + 1 == sub { b } else { lo + h };
            acc += rule.integrate(lo, hi, &mut f);
        }
    }
    acc
}

/// Composite Simpson rule on arbitrary (strictly increasing) abscissae.
///
/// Pairs of intervals use the three-point rule for unequal spacing; an odd
/// trailing interval gets the matching one-interval correction. Two samples
/// fall back to the trapezoid.
pub fn simpson(t: &[f64], y: &[f64]) -> f64 {
    assert_eq!(t.len(), y.len());
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut acc = 0.0;
    let mut i = 0;
    while i < paired {
        let h0 = t[i + 1] - t[i];
        let h1 = t[i + 2] - t[i + 1];
        let s = h0 + h1;
        acc += s / 6.0
            * ((2.0 - h1 / h0) * y[i] + s * s / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if paired < intervals {
        let h0 = t[n - 2] - t[n - 3];
        let h1 = t[n - 1] - t[n - 2];
        let a = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let b = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let c = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        acc += a * y[n - 1] + b * y[n - 2] - c * y[n - 3];
    }
    acc
}

/// Polynomial extrapolation of `(h, value)` samples to `h = 0` (Neville's scheme).
pub fn extrapolate_to_zero(h: &[f64], v: &[f64]) -> f64 {
    assert_eq!(h.len(), v.len());
    assert!(!h.is_empty());
    let mut p = v.to_vec();
    let n = h.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / (h[i] - h[i + m]);
        }
    }
    p[0]
}
