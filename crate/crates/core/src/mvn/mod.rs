//! Multivariate normal rectangle probabilities.
//!
//! Dimensions one and two are routed to deterministic quadrature; higher
//! dimensions use randomized quasi-Monte Carlo with a separation-of-variables
//! transform. Results are deterministic for a fixed seed.

mod bivariate;
mod normal;
mod qmc;

pub use bivariate::{bvn_rect, bvn_upper};
pub use normal::{cdf, pdf, quantile};


use crate::error::{DesignError, Result};
use crate::matrix::Matrix;

/// Hard cap on the joint dimension.
pub const MAX_DIM: usize = 25;

/// Integration controls. `target_error` is an absolute error target for the
/// returned probability; `max_samples` bounds the total number of integrand
/// evaluations; `seed` makes the result reproducible.
#[derive(Debug, Clone, Copy)]
pub struct MvnSettings {
    pub target_error: f64,
    pub max_samples: u64,
    pub seed: u64,
}

impl Default for MvnSettings {
    fn default() -> Self {
        MvnSettings {
            target_error: 1e-6,
            max_samples: 40_000_000,
            seed: 0x7A71,
        }
    }
}

impl MvnSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_error > 0.0 && self.target_error <= 1e-2) {
            return Err(DesignError::InvalidSpec(format!(
                "target error must lie in (0, 1e-2], got {}",
                self.target_error
            )));
        }
        if self.max_samples < 1_000 {
            return Err(DesignError::InvalidSpec(
                "sample budget must be at least 1000".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_error = target;
        self
    }
}

/// An axis-aligned rectangle under a multivariate normal law with unit
/// variances and the given correlation matrix. Limits may be infinite.
#[derive(Debug, Clone)]
pub struct Rectangle {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub corr: Matrix,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, corr: Matrix) -> Result<Self> {
        let d = lower.len();
        if upper.len() != d || corr.dim() != d {
            return Err(DesignError::InvalidSpec(
                "rectangle limit/correlation dimensions disagree".into(),
            ));
        }
        if d > MAX_DIM {
            return Err(DesignError::DimensionTooLarge(d, MAX_DIM));
        }
        for i in 0..d {
            if lower[i] > upper[i] {
                return Err(DesignError::InvalidSpec(format!(
                    "lower limit exceeds upper limit in coordinate {i}"
                )));
            }
            if lower[i].is_nan() || upper[i].is_nan() {
                return Err(DesignError::InvalidSpec("NaN rectangle limit".into()));
            }
        }
        if !corr.is_symmetric(1e-10) || !corr.has_unit_diagonal(1e-10) {
            return Err(DesignError::InvalidSpec(
                "correlation matrix must be symmetric with unit diagonal".into(),
            ));
        }
        Ok(Rectangle { lower, upper, corr })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Probability estimate with its error bound and convergence flag.
#[derive(Debug, Clone, Copy)]
pub struct MvnResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Probability of `rect` under the standard MVN with the rectangle's
/// correlation matrix.
pub fn mvn_prob(rect: &Rectangle, settings: &MvnSettings) -> Result<MvnResult> {
    settings.validate()?;
    let d = rect.dim();
    if d == 0 {
        return Ok(MvnResult {
            value: 1.0,
            error: 0.0,
            converged: true,
        });
    }

    // cheap upper bound: P(rect) <= min marginal probability
    let mut pmin = 1.0f64;
    for i in 0..d {
        let p = cdf(rect.upper[i]) - cdf(rect.lower[i]);
        pmin = pmin.min(p);
    }
    if pmin <= settings.target_error {
        return Ok(MvnResult {
            value: 0.0,
            error: pmin.max(0.0),
            converged: true,
        });
    }

    match d {
        1 => Ok(MvnResult {
            value: (cdf(rect.upper[0]) - cdf(rect.lower[0])).clamp(0.0, 1.0),
            error: 1e-14,
            converged: true,
        }),
        2 => {
            let rho = rect.corr.get(0, 1);
            let p = bvn_rect(
                [rect.lower[0], rect.lower[1]],
                [rect.upper[0], rect.upper[1]],
                rho,
            );
            Ok(MvnResult {
                value: p,
                error: 1e-10,
                converged: true,
            })
        }
        _ => {
            let problem = qmc::factor(&rect.corr, &rect.lower, &rect.upper)?;
            let out = qmc::integrate(
                &problem,
                settings.target_error,
                settings.max_samples,
                settings.seed,
            );
            Ok(MvnResult {
                value: out.value,
                error: out.error,
                converged: out.error <= settings.target_error,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq_corr(dim: usize, rho: f64) -> Matrix {
        Matrix::from_fn(dim, |i, j| if i == j { 1.0 } else { rho })
    }

    #[test]
    fn univariate_matches_cdf() {
        let r = Rectangle::new(
            vec![f64::NEG_INFINITY],
            vec![1.959963984540054],
            Matrix::identity(1),
        )
        .unwrap();
        let p = mvn_prob(&r, &MvnSettings::default()).unwrap();
        assert!((p.value - 0.975).abs() < 1e-12);
    }

    #[test]
    fn trivariate_orthant_equicorrelated() {
        // P(X_i < 0 for all i) with pairwise correlation 0.5 equals 1/4
        // (equicorrelated orthant closed form for rho = 0.5, d = 3:
        //  1/8 + 3 asin(0.5) / (4 pi)).
        let want = 0.125 + 3.0 * (0.5f64).asin() / (4.0 * std::f64::consts::PI);
        let r = Rectangle::new(
            vec![f64::NEG_INFINITY; 3],
            vec![0.0; 3],
            eq_corr(3, 0.5),
        )
        .unwrap();
        let s = MvnSettings {
            target_error: 1e-7,
            ..Default::default()
        };
        let p = mvn_prob(&r, &s).unwrap();
        assert!(p.converged);
        assert!((p.value - want).abs() < 3e-7, "{} vs {want}", p.value);
    }

    #[test]
    fn independent_product_dim5() {
        let r = Rectangle::new(vec![-1.0; 5], vec![2.0; 5], Matrix::identity(5)).unwrap();
        let p = mvn_prob(&r, &MvnSettings::default()).unwrap();
        let want = (cdf(2.0) - cdf(-1.0)).powi(5);
        assert!((p.value - want).abs() < 5e-6, "{} vs {want}", p.value);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let r = Rectangle::new(vec![-1.5; 4], vec![1.0; 4], eq_corr(4, 0.3)).unwrap();
        let s = MvnSettings::default().with_seed(42);
        let a = mvn_prob(&r, &s).unwrap();
        let b = mvn_prob(&r, &s).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn rejects_bad_rectangle() {
        assert!(Rectangle::new(vec![1.0], vec![0.0], Matrix::identity(1)).is_err());
        assert!(Rectangle::new(vec![0.0; 26], vec![1.0; 26], Matrix::identity(26)).is_err());
    }

    #[test]
    fn semidefinite_block_handled() {
        // duplicated coordinate (correlation 1) stays integrable
        let mut corr = Matrix::identity(3);
        corr.set(0, 1, 1.0);
        corr.set(1, 0, 1.0);
        let r = Rectangle::new(vec![-1.0; 3], vec![1.0; 3], corr).unwrap();
        let p = mvn_prob(&r, &MvnSettings::default()).unwrap();
        let want = (cdf(1.0) - cdf(-1.0)).powi(2);
        assert!((p.value - want).abs() < 1e-5, "{} vs {want}", p.value);
    }
}
