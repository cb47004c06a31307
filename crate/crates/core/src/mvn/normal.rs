//! Standard normal density, distribution function and quantile.

use crate::error::{DesignError, Result};
use std::f64::consts::FRAC_1_SQRT_2;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal distribution function, accurate to ~1e-15.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Hastings' rational approximation for the lower-tail quantile,
/// \|error\| < 4.5e-4. Input `t = sqrt(-2 ln p)` for p < 0.5.
#[inline]
fn hastings(t: f64) -> f64 {
    t - (2.515517 + t * (0.802853 + t * 0.010328))
        / (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)))
}

#[inline]
fn quantile_lower(p: f64, newton_steps: usize) -> f64 {
    // p in (0, 0.5]
    let t = (-2.0 * p.ln()).sqrt();
    let mut x = -hastings(t);
    for _ in 0..newton_steps {
        let d = pdf(x);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        x -= (cdf(x) - p) / d;
    }
    x
}

#[inline]
fn quantile_inner(p: f64, newton_steps: usize) -> f64 {
    if p > 0.5 {
        -quantile_lower(1.0 - p, newton_steps)
    } else {
        quantile_lower(p, newton_steps)
    }
}

/// Standard normal quantile, inverse of [`cdf`] to ~1e-12.
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DesignError::OutOfRange(format!(
            "quantile requires p in (0,1), got {p}"
        )));
    }
    Ok(quantile_inner(p, 3))
}

/// Cheaper quantile for the inner integration loop (~1e-7 absolute).
/// The argument is clamped away from 0 and 1.
#[inline]
pub(crate) fn quantile_fast(p: f64) -> f64 {
    let p = p.clamp(1e-16, 1.0 - 1e-16);
    quantile_inner(p, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_known_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((cdf(-1.959963984540054) - 0.025).abs() < 1e-12);
        assert!((cdf(f64::INFINITY) - 1.0).abs() < 1e-15);
        assert_eq!(cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn quantile_known_values() {
        assert!((quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-10);
        assert!((quantile(0.5).unwrap()).abs() < 1e-12);
        assert!((quantile(0.8).unwrap() - 0.8416212335729143).abs() < 1e-10);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        assert!(quantile(0.0).is_err());
        assert!(quantile(1.0).is_err());
        assert!(quantile(-0.2).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let mut p = 1e-10;
        while p < 1.0 {
            let x = quantile(p).unwrap();
            assert!(
                (cdf(x) - p).abs() <= 1e-10 * (1.0 + 1.0 / p.min(1.0 - p)).min(1e4),
                "round trip failed at p={p}: cdf(quantile)={}",
                cdf(x)
            );
            p *= 3.7;
        }
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let x = quantile(p).unwrap();
            assert!((cdf(x) - p).abs() < 1e-12);
        }
    }
}
