//! Randomized quasi-Monte Carlo integration of multivariate normal
//! rectangle probabilities using the separation-of-variables transform
//! with a pivoted Cholesky factorization and greedy variable reordering.

use super::normal::{cdf, pdf, quantile_fast};
use crate::error::{DesignError, Result};
use crate::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PSD_TOL: f64 = 1e-9;

/// Factored problem ready for sampling: lower/upper limits and the Cholesky
/// factor, in integration order.
pub(crate) struct SovProblem {
    lower: Vec<f64>,
    upper: Vec<f64>,
    chol: Matrix,
    dim: usize,
}

/// Pivoted Cholesky with greedy ordering: at each step pick the remaining
/// variable whose conditional interval probability (at the truncated-normal
/// expected point) is smallest. Tolerates semidefinite input.
pub(crate) fn factor(corr: &Matrix, lower: &[f64], upper: &[f64]) -> Result<SovProblem> {
    let d = corr.dim();
    let mut cov = corr.clone();
    let mut a: Vec<f64> = lower.to_vec();
    let mut b: Vec<f64> = upper.to_vec();
    let mut chol = Matrix::zeros(d);
    let mut y = vec![0.0; d];

    for i in 0..d {
        // choose pivot
        let mut best = i;
        let mut best_p = f64::INFINITY;
        for j in i..d {
            let mut s2 = cov.get(j, j);
            let mut mean = 0.0;
            for m in 0..i {
                s2 -= chol.get(j, m) * chol.get(j, m);
                mean += chol.get(j, m) * y[m];
            }
            if s2 < -PSD_TOL {
                return Err(DesignError::NotPositiveSemidefinite);
            }
            let sd = s2.max(0.0).sqrt();
            let p = if sd > 0.0 {
                cdf((b[j] - mean) / sd) - cdf((a[j] - mean) / sd)
            } else {
                f64::INFINITY // degenerate pivots last
            };
            if p < best_p {
                best_p = p;
                best = j;
            }
        }
        if best != i {
            cov.swap_symmetric(i, best);
            a.swap(i, best);
            b.swap(i, best);
            for m in 0..i {
                let t = chol.get(i, m);
                chol.set(i, m, chol.get(best, m));
                chol.set(best, m, t);
            }
        }

        let mut s2 = cov.get(i, i);
        for m in 0..i {
            s2 -= chol.get(i, m) * chol.get(i, m);
        }
        if s2 < -PSD_TOL {
            return Err(DesignError::NotPositiveSemidefinite);
        }
        let cii = s2.max(0.0).sqrt();
        chol.set(i, i, cii);
        if cii > PSD_TOL {
            for m in (i + 1)..d {
                let mut v = cov.get(m, i);
                for t in 0..i {
                    v -= chol.get(m, t) * chol.get(i, t);
                }
                chol.set(m, i, v / cii);
            }
            // expected value of the truncated conditional for ordering later rows
            let mut mean = 0.0;
            for m in 0..i {
                mean += chol.get(i, m) * y[m];
            }
            let lo = (a[i] - mean) / cii;
            let hi = (b[i] - mean) / cii;
            let p = cdf(hi) - cdf(lo);
            y[i] = if p > 1e-300 {
                (pdf(lo) - pdf(hi)) / p
            } else {
                0.5 * (lo.clamp(-10.0, 10.0) + hi.clamp(-10.0, 10.0))
            };
        } else {
            chol.set(i, i, 0.0);
            for m in (i + 1)..d {
                chol.set(m, i, 0.0);
            }
            y[i] = 0.0;
        }
    }
    Ok(SovProblem {
        lower: a,
        upper: b,
        chol,
        dim: d,
    })
}

impl SovProblem {
    /// Evaluate the separation-of-variables integrand at a point of the unit
    /// cube (only the first `dim - 1` coordinates of `w` are used).
    #[inline]
    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut f = 1.0;
        for i in 0..d {
            let mut mean = 0.0;
            for m in 0..i {
                mean += self.chol.get(i, m) * y[m];
            }
            let cii = self.chol.get(i, i);
            let (lo, hi) = if cii > 0.0 {
                (
                    cdf((self.lower[i] - mean) / cii),
                    cdf((self.upper[i] - mean) / cii),
                )
            } else {
                // deterministic coordinate: indicator of the limits
                if self.lower[i] - mean > 1e-9 || self.upper[i] - mean < -1e-9 {
                    return 0.0;
                }
                (0.0, 1.0)
            };
            let width = hi - lo;
            if width <= 0.0 {
                return 0.0;
            }
            f *= width;
            if i + 1 < d {
                y[i] = if cii > 0.0 {
                    quantile_fast(lo + w[i] * width)
                } else {
                    0.0
                };
            }
        }
        f
    }
}

/// First `n` primes for the Richtmyer generators.
fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if (2..c).take_while(|p| p * p <= c).all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

pub(crate) struct QmcOutcome {
    pub value: f64,
    pub error: f64,
}

/// Randomized lattice integration with `n_shifts` random shifts; the sample
/// count grows until the (3 sigma) error estimate meets `target` or the
/// budget is exhausted.
pub(crate) fn integrate(
    problem: &SovProblem,
    target: f64,
    max_samples: u64,
    seed: u64,
) -> QmcOutcome {
    let d = problem.dim;
    let lattice_dim = (d - 1).max(1);
    let n_shifts = 12usize;
    let gens: Vec<f64> = primes(lattice_dim)
        .iter()
        .map(|&p| (p as f64).sqrt().fract())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<Vec<f64>> = (0..n_shifts)
        .map(|_| (0..lattice_dim).map(|_| rng.gen::<f64>()).collect())
        .collect();

    let mut sums = vec![0.0f64; n_shifts];
    let mut n_done: u64 = 0;
    let mut batch: u64 = 24 * d as u64;
    let mut w = vec![0.0; lattice_dim];
    let mut y = vec![0.0; d];

    loop {
        for (m, shift) in shifts.iter().enumerate() {
            let mut acc = 0.0;
            for j in (n_done + 1)..=(n_done + batch) {
                for i in 0..lattice_dim {
                    let v = (j as f64 * gens[i] + shift[i]).fract();
                    w[i] = (2.0 * v - 1.0).abs();
                }
                acc += problem.integrand(&w, &mut y);
            }
            sums[m] += acc;
        }
        n_done += batch;

        let means: Vec<f64> = sums.iter().map(|s| s / n_done as f64).collect();
        let mean = means.iter().sum::<f64>() / n_shifts as f64;
        let var = means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n_shifts as f64 * (n_shifts - 1) as f64);
        let err = 3.0 * var.sqrt();
        let total = n_done * n_shifts as u64;
        if err <= target || total >= max_samples {
            return QmcOutcome {
                value: mean.clamp(0.0, 1.0),
                error: err,
            };
        }
        batch = n_done; // double
    }
}
