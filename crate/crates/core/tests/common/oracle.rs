//! Reference values computed by adaptive Gauss–Kronrod quadrature straight from
//! the defining integrals. Only the mollifier density is taken from the crate.

use super::Mollifier;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adapt(&mut f, a, b, tol, 40)
}

/// Integrates over consecutive breakpoints.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: f64) -> f64 {
    let n = breaks.len().saturating_sub(1).max(1) as f64;
    breaks
        .windows(2)
        .map(|w| integrate(&mut f, w[0], w[1], tol / n))
        .sum()
}

/// Effective support of `ρ_ε`.
pub fn reach(m: &Mollifier) -> f64 {
    let r = m.support_radius();
    if r.is_finite() {
        r
    } else {
        40.0 * m.epsilon()
    }
}

pub fn f1(m: &Mollifier, x: f64) -> f64 {
    let lo = -reach(m);
    if x <= lo {
        return 0.0;
    }
    let r = reach(m);
    let mut breaks = vec![lo];
    for b in [-r, 0.0, r] {
        if b > lo && b < x {
            breaks.push(b);
        }
    }
    breaks.push(x);
    breaks.dedup();
    0.5 * integrate_pieces(|y| m.density(y) * (y - x).exp(), &breaks, 1e-15)
}

fn mollify<F: Fn(f64) -> f64>(m: &Mollifier, x: f64, f: F) -> f64 {
    // ∫ρ_ε(y) f(x − y) dy, split where the kernel argument has its kink.
    let r = reach(m);
    let mut breaks = vec![-r, r];
    if x > -r && x < r {
        breaks.insert(1, x);
    }
    integrate_pieces(|y| m.density(y) * f(x - y), &breaks, 1e-15)
}

pub fn g_eps(m: &Mollifier, x: f64) -> f64 {
    mollify(m, x, |z| 0.5 * (-z.abs()).exp())
}

pub fn gx_eps(m: &Mollifier, x: f64) -> f64 {
    mollify(m, x, |z| {
        if z == 0.0 {
            0.0
        } else {
            -z.signum() * 0.5 * (-z.abs()).exp()
        }
    })
}
