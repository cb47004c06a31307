//! Monte Carlo simulation of platform trial conduct: an independent check
//! on every analytic probability.
//!
//! The default mode draws stage-increment sufficient statistics (sums of
//! outcomes per recruitment segment), which is distributionally identical to
//! patient-level simulation; a patient-level mode is kept behind a flag.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{DesignError, Result};
use crate::matrix::Matrix;
use crate::model::{AllocationSchedule, BoundaryMatrix, ScenarioTheta};
use crate::oc::{mix_seed, sample_size_of_cell};

/// A simulation scenario: design, true effects, and run controls.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub schedule: AllocationSchedule,
    pub boundaries: BoundaryMatrix,
    /// True standardized effects; -inf marks an arm certain to stop for
    /// futility at its first analysis.
    pub theta: ScenarioTheta,
    /// Relevance threshold defining which arms the conjunctive rate covers.
    pub theta_clin: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Draw individual patient outcomes instead of stage-increment sums.
    pub patient_level: bool,
}

/// An empirical rate with its binomial Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub se: f64,
}

fn rate(hits: u64, reps: u64) -> RateEstimate {
    let r = reps as f64;
    let p = hits as f64 / r;
    RateEstimate { rate: p, se: (p * (1.0 - p) / r).sqrt() }
}

/// Empirical operating characteristics from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub replicates: u64,
    /// Probability of declaring superiority for any arm whose true effect is
    /// at most zero (the family-wise error under the supplied scenario).
    pub fwer: RateEstimate,
    /// Per-arm probability of a superiority declaration.
    pub pairwise: Vec<RateEstimate>,
    /// All relevant arms (theta >= theta_clin) declared superior; 1 when no
    /// arm is relevant.
    pub conjunctive: RateEstimate,
    /// At least one arm declared superior.
    pub disjunctive: RateEstimate,
    pub expected_total: f64,
    pub expected_total_se: f64,
    pub expected_per_arm: Vec<f64>,
    pub expected_control: f64,
    /// Empirical distribution of the realized total sample size.
    pub histogram: BTreeMap<u64, f64>,
    /// `rejection_stages[k][j-1]` = probability arm k is declared superior
    /// at its stage-j analysis.
    pub rejection_stages: Vec<Vec<f64>>,
}

/// One replicate's conduct outcome.
struct Replicate {
    exit_stage: Vec<usize>,
    superior: Vec<bool>,
}

/// Stagewise statistics for every arm, with no stopping applied.
fn draw_statistics(
    schedule: &AllocationSchedule,
    theta: &[f64],
    patient_level: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let kk = schedule.n_arms();
    let j_max = schedule.stages();

    // sum of `count` unit-variance outcomes with the given mean
    let mut segment_sum = |mean: f64, count: u64| -> f64 {
        if count == 0 {
            return 0.0;
        }
        if patient_level {
            (0..count).map(|_| mean + rng.sample::<f64, _>(StandardNormal)).sum()
        } else {
            mean * count as f64
                + (count as f64).sqrt() * rng.sample::<f64, _>(StandardNormal)
        }
    };

    // control outcomes are shared: draw one sum per segment of the control
    // timeline, split at every count where some arm's window starts or ends
    let mut cuts: Vec<u64> = Vec::new();
    for k in 0..kk {
        cuts.push(schedule.n_before[k]);
        cuts.extend_from_slice(&schedule.n_control[k]);
    }
    cuts.push(0);
    cuts.sort_unstable();
    cuts.dedup();
    // prefix[i] = sum of control outcomes among the first cuts[i] patients
    let mut prefix = vec![0.0; cuts.len()];
    for i in 1..cuts.len() {
        prefix[i] = prefix[i - 1] + segment_sum(0.0, cuts[i] - cuts[i - 1]);
    }
    let control_sum = |from: u64, to: u64| -> f64 {
        let at = |c: u64| prefix[cuts.binary_search(&c).unwrap()];
        at(to) - at(from)
    };

    let mut z = vec![vec![f64::NEG_INFINITY; j_max]; kk];
    for k in 0..kk {
        if theta[k] == f64::NEG_INFINITY {
            continue;
        }
        let mut active_sum = 0.0;
        let mut prev = 0u64;
        for j in 1..=j_max {
            let n_act = schedule.n_active[k][j - 1];
            active_sum += segment_sum(theta[k], n_act - prev);
            prev = n_act;
            let n_con = schedule.concurrent_controls(k, j);
            let con_sum = control_sum(schedule.n_before[k], schedule.n_control[k][j - 1]);
            let diff = active_sum / n_act as f64 - con_sum / n_con as f64;
            z[k][j - 1] = diff / (1.0 / n_act as f64 + 1.0 / n_con as f64).sqrt();
        }
    }
    z
}

/// Apply the stopping rules to one replicate's statistics. A lower-boundary
/// crossing stops the arm in conduct even when futility is non-binding.
fn conduct(
    boundaries: &BoundaryMatrix,
    z: &[Vec<f64>],
) -> Replicate {
    let kk = z.len();
    let j_max = z[0].len();
    let mut exit_stage = vec![j_max; kk];
    let mut superior = vec![false; kk];
    for k in 0..kk {
        for j in 1..=j_max {
            if z[k][j - 1] >= boundaries.upper[k][j - 1] {
                exit_stage[k] = j;
                superior[k] = true;
                break;
            }
            if z[k][j - 1] <= boundaries.lower[k][j - 1] {
                exit_stage[k] = j;
                break;
            }
        }
    }
    Replicate { exit_stage, superior }
}

struct Accumulator {
    reps: u64,
    any_true_null_rejected: u64,
    pairwise: Vec<u64>,
    conjunctive: u64,
    disjunctive: u64,
    total_n: f64,
    total_n_sq: f64,
    per_arm_n: Vec<f64>,
    control_n: f64,
    histogram: BTreeMap<u64, u64>,
    rejection_stages: Vec<Vec<u64>>,
}

impl Accumulator {
    fn new(kk: usize, j_max: usize) -> Self {
        Accumulator {
            reps: 0,
            any_true_null_rejected: 0,
            pairwise: vec![0; kk],
            conjunctive: 0,
            disjunctive: 0,
            total_n: 0.0,
            total_n_sq: 0.0,
            per_arm_n: vec![0.0; kk],
            control_n: 0.0,
            histogram: BTreeMap::new(),
            rejection_stages: vec![vec![0; j_max]; kk],
        }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.reps += other.reps;
        self.any_true_null_rejected += other.any_true_null_rejected;
        self.conjunctive += other.conjunctive;
        self.disjunctive += other.disjunctive;
        self.total_n += other.total_n;
        self.total_n_sq += other.total_n_sq;
        self.control_n += other.control_n;
        for (a, b) in self.pairwise.iter_mut().zip(&other.pairwise) {
            *a += b;
        }
        for (a, b) in self.per_arm_n.iter_mut().zip(&other.per_arm_n) {
            *a += b;
        }
        for (n, c) in other.histogram {
            *self.histogram.entry(n).or_insert(0) += c;
        }
        for (ra, rb) in self.rejection_stages.iter_mut().zip(&other.rejection_stages) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self
    }
}

fn validate(config: &SimConfig) -> Result<()> {
    config.schedule.validate()?;
    config.boundaries.validate()?;
    if config.theta.len() != config.schedule.n_arms() {
        return Err(DesignError::InvalidSpec("theta length must match arm count".into()));
    }
    if config.replicates == 0 {
        return Err(DesignError::InvalidSpec("need at least one replicate".into()));
    }
    Ok(())
}

/// Run the simulation. Results are bit-identical for a given config: each
/// replicate's generator is derived from (seed, replicate index), so the
/// partitioning across worker threads cannot change the outcome.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    validate(config)?;
    let schedule = &config.schedule;
    let kk = schedule.n_arms();
    let j_max = schedule.stages();
    let theta = &config.theta.0;
    let true_null: Vec<bool> = theta.iter().map(|&t| t <= 0.0).collect();
    let relevant: Vec<bool> = theta.iter().map(|&t| t >= config.theta_clin).collect();
    let any_relevant = relevant.iter().any(|&r| r);

    const CHUNK: u64 = 4096;
    let n_chunks = (config.replicates + CHUNK - 1) / CHUNK;
    let acc = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(config.replicates);
            let mut acc = Accumulator::new(kk, j_max);
            for rep in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, rep));
                let z = draw_statistics(schedule, theta, config.patient_level, &mut rng);
                let r = conduct(&config.boundaries, &z);
                acc.reps += 1;
                let mut any = false;
                let mut all_relevant = true;
                let mut any_true = false;
                for k in 0..kk {
                    if r.superior[k] {
                        acc.pairwise[k] += 1;
                        acc.rejection_stages[k][r.exit_stage[k] - 1] += 1;
                        any = true;
                        if true_null[k] {
                            any_true = true;
                        }
                    } else if relevant[k] {
                        all_relevant = false;
                    }
                    acc.per_arm_n[k] += schedule.n_active[k][r.exit_stage[k] - 1] as f64;
                }
                if any {
                    acc.disjunctive += 1;
                }
                if any_true {
                    acc.any_true_null_rejected += 1;
                }
                if all_relevant && any_relevant {
                    acc.conjunctive += 1;
                }
                let control = (0..kk)
                    .map(|k| schedule.n_control[k][r.exit_stage[k] - 1])
                    .max()
                    .unwrap();
                acc.control_n += control as f64;
                let total = sample_size_of_cell(schedule, &r.exit_stage);
                acc.total_n += total as f64;
                acc.total_n_sq += (total * total) as f64;
                *acc.histogram.entry(total).or_insert(0) += 1;
            }
            acc
        })
        .reduce(|| Accumulator::new(kk, j_max), Accumulator::merge);

    let r = config.replicates as f64;
    let mean_n = acc.total_n / r;
    let var_n = (acc.total_n_sq / r - mean_n * mean_n).max(0.0);
    Ok(SimResult {
        replicates: config.replicates,
        fwer: rate(acc.any_true_null_rejected, config.replicates),
        pairwise: acc.pairwise.iter().map(|&h| rate(h, config.replicates)).collect(),
        conjunctive: if any_relevant {
            rate(acc.conjunctive, config.replicates)
        } else {
            RateEstimate { rate: 1.0, se: 0.0 }
        },
        disjunctive: rate(acc.disjunctive, config.replicates),
        expected_total: mean_n,
        expected_total_se: (var_n / r).sqrt(),
        expected_per_arm: acc.per_arm_n.iter().map(|&s| s / r).collect(),
        expected_control: acc.control_n / r,
        histogram: acc.histogram.iter().map(|(&n, &c)| (n, c as f64 / r)).collect(),
        rejection_stages: acc
            .rejection_stages
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / r).collect())
            .collect(),
    })
}

/// Empirical correlation matrix of all stagewise statistics, simulated with
/// no stopping so every Z_{k,j} is observed. Rows/columns follow the label
/// order (arm 0 stage 1, arm 0 stage 2, ..., arm K-1 stage J). Effects
/// cancel out of the correlation, so -inf entries are treated as zero.
pub fn correlation_check(config: &SimConfig) -> Result<Matrix> {
    validate(config)?;
    let schedule = &config.schedule;
    let kk = schedule.n_arms();
    let j_max = schedule.stages();
    let theta: Vec<f64> = config
        .theta
        .0
        .iter()
        .map(|&t| if t == f64::NEG_INFINITY { 0.0 } else { t })
        .collect();
    let dim = kk * j_max;

    const CHUNK: u64 = 4096;
    let n_chunks = (config.replicates + CHUNK - 1) / CHUNK;
    let (sum, cross) = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(config.replicates);
            let mut sum = vec![0.0; dim];
            let mut cross = vec![0.0; dim * dim];
            for rep in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, rep));
                let z = draw_statistics(schedule, &theta, config.patient_level, &mut rng);
                let flat: Vec<f64> = z.iter().flatten().copied().collect();
                for i in 0..dim {
                    sum[i] += flat[i];
                    for j in 0..dim {
                        cross[i * dim + j] += flat[i] * flat[j];
                    }
                }
            }
            (sum, cross)
        })
        .reduce(
            || (vec![0.0; dim], vec![0.0; dim * dim]),
            |(mut s1, mut c1), (s2, c2)| {
                for (a, b) in s1.iter_mut().zip(&s2) {
                    *a += b;
                }
                for (a, b) in c1.iter_mut().zip(&c2) {
                    *a += b;
                }
                (s1, c1)
            },
        );

    let r = config.replicates as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / r).collect();
    let cov = |i: usize, j: usize| cross[i * dim + j] / r - mean[i] * mean[j];
    Ok(Matrix::from_fn(dim, |i, j| {
        cov(i, j) / (cov(i, i) * cov(j, j)).sqrt()
    }))
}
