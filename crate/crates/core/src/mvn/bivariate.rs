//! Bivariate normal rectangle probabilities via single-integral quadrature.
//!
//! Based on the Drezner–Wesolowsky identity
//!   P(X > h, Y > k) = Phi(-h) Phi(-k)
//!     + 1/(2 pi) * int_0^{asin rho} exp(-(h^2 + k^2 - 2 h k sin t) / (2 cos^2 t)) dt,
//! evaluated with Gauss–Legendre panels refined toward the upper limit for
//! correlations near +/-1.

use super::normal::cdf;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes/weights on [-1, 1], computed by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre polynomial and derivative at x
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let mut p0 = 1.0;
        let mut p1 = x;
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(20))
}

#[inline]
fn integrand(h: f64, k: f64, t: f64) -> f64 {
    let s = t.sin();
    let c2 = 1.0 - s * s;
    (-(h * h + k * k - 2.0 * h * k * s) / (2.0 * c2)).exp()
}

fn panel(h: f64, k: f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl20();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * integrand(h, k, mid + half * x);
    }
    acc * half
}

/// P(X > h, Y > k) for standard bivariate normals with correlation `rho`.
pub fn bvn_upper(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return cdf(-h);
    }
    debug_assert!((-1.0..=1.0).contains(&rho));
    if rho >= 0.999999 {
        return cdf(-h.max(k));
    }
    if rho <= -0.999999 {
        // Y = -X: need h < X < -k
        return (cdf(-k) - cdf(h)).max(0.0);
    }
    let s = rho.asin();
    let base = cdf(-h) * cdf(-k);
    if rho == 0.0 {
        return base;
    }
    let mut integral = 0.0;
    if rho.abs() <= 0.925 {
        // smooth integrand: a few uniform panels suffice
        let n_panels = 3;
        for i in 0..n_panels {
            let a = s * i as f64 / n_panels as f64;
            let b = s * (i + 1) as f64 / n_panels as f64;
            integral += panel(h, k, a, b);
        }
    } else {
        // refine geometrically toward asin(rho) where the integrand steepens
        let mut hi = s;
        let mut width = s * 0.5;
        for _ in 0..40 {
            let lo = hi - width;
            integral += panel(h, k, lo, hi);
            hi = lo;
            width *= 0.5;
            if width.abs() < 1e-14 {
                break;
            }
        }
        integral += panel(h, k, 0.0, hi);
    }
    (base + integral / (2.0 * PI)).clamp(0.0, 1.0)
}

/// P(a0 < X < b0, a1 < Y < b1) for standard bivariate normals with
/// correlation `rho`. Limits may be infinite.
pub fn bvn_rect(lower: [f64; 2], upper: [f64; 2], rho: f64) -> f64 {
    let p = bvn_upper(lower[0], lower[1], rho) - bvn_upper(upper[0], lower[1], rho)
        - bvn_upper(lower[0], upper[1], rho)
        + bvn_upper(upper[0], upper[1], rho);
    p.clamp(0.0, 1.0)
}
