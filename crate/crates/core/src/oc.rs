//! Operating characteristics: family-wise error rate, the three notions of
//! power, joint outcome probabilities, and expected sample size.
//!
//! Every quantity is an orthant-type probability of the joint normal vector
//! of stagewise statistics, evaluated as a sum of rectangle probabilities —
//! one per combination of per-arm exit stages.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{DesignError, Result};
use crate::model::{
    correlation_for_labels, drift, AllocationSchedule, BoundaryMatrix, OutcomeCell, ScenarioTheta,
};
use crate::mvn::{mvn_prob, MvnSettings, Rectangle};

/// A probability together with its integration error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbEstimate {
    pub value: f64,
    pub error: f64,
}

impl ProbEstimate {
    pub const ZERO: ProbEstimate = ProbEstimate { value: 0.0, error: 0.0 };

    fn add(&mut self, other: ProbEstimate) {
        self.value += other.value;
        self.error = (self.error * self.error + other.error * other.error).sqrt();
    }
}

/// Mix a cell index into the base seed so parallel integrals get
/// independent, reproducible scrambles (splitmix64 step).
pub(crate) fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Integration limits contributed by one arm to a joint rectangle.
///
/// `stage` is the arm's exit stage (1-based); earlier stages contribute
/// continuation intervals, the exit stage contributes the interval matching
/// `exit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Superiority,
    Futility,
    Continue,
}

fn arm_coords(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    k: usize,
    stage: usize,
    exit: Exit,
    theta: f64,
    labels: &mut Vec<(usize, usize)>,
    lower: &mut Vec<f64>,
    upper: &mut Vec<f64>,
) {
    let u = &boundaries.upper[k];
    let l = &boundaries.lower[k];
    for j in 1..=stage {
        let d = drift(schedule, k, j, theta);
        labels.push((k, j));
        if j < stage {
            lower.push(l[j - 1] - d);
            upper.push(u[j - 1] - d);
        } else {
            match exit {
                Exit::Superiority => {
                    lower.push(u[j - 1] - d);
                    upper.push(f64::INFINITY);
                }
                Exit::Futility => {
                    lower.push(f64::NEG_INFINITY);
                    upper.push(l[j - 1] - d);
                }
                Exit::Continue => {
                    lower.push(l[j - 1] - d);
                    upper.push(u[j - 1] - d);
                }
            }
        }
    }
}

/// Probability of a joint event described per arm, with an empty arm list
/// meaning the sure event. Arms not listed are marginalized out.
fn joint_prob(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    parts: &[(usize, usize, Exit, f64)],
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    let mut labels = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &(k, stage, exit, theta) in parts {
        arm_coords(schedule, boundaries, k, stage, exit, theta, &mut labels, &mut lower, &mut upper);
    }
    if labels.is_empty() {
        return Ok(ProbEstimate { value: 1.0, error: 0.0 });
    }
    // an empty interval anywhere kills the whole cell
    if lower.iter().zip(&upper).any(|(lo, hi)| hi <= lo) {
        return Ok(ProbEstimate::ZERO);
    }
    let corr = correlation_for_labels(schedule, &labels);
    let rect = Rectangle::new(lower, upper, corr)?;
    let res = mvn_prob(&rect, settings)?;
    Ok(ProbEstimate { value: res.value, error: res.error })
}

/// Sum many cell probabilities to a total absolute error target.
///
/// A first pass runs every cell at a loose per-cell target; cells whose
/// error estimates dominate the combined error are then re-run with
/// tighter, share-proportional targets. Negligible cells converge cheaply
/// in the first pass, so the effort concentrates where it matters.
fn adaptive_cell_sum<F>(ncells: usize, settings: &MvnSettings, eval: F) -> Result<ProbEstimate>
where
    F: Fn(usize, &MvnSettings) -> Result<ProbEstimate> + Sync,
{
    let loose = settings.clone();
    let mut cells: Vec<ProbEstimate> = (0..ncells)
        .into_par_iter()
        .map(|i| eval(i, &loose.clone().with_seed(mix_seed(settings.seed, i as u64))))
        .collect::<Result<Vec<_>>>()?;
    let norm = |cs: &[ProbEstimate]| -> f64 {
        cs.iter().map(|c| c.error * c.error).sum::<f64>().sqrt()
    };
    let mut total_err = norm(&cells);
    if total_err > settings.target_error {
        let scale = settings.target_error / total_err;
        let refine: Vec<usize> = (0..ncells)
            .filter(|&i| cells[i].error > settings.target_error / (ncells as f64).sqrt())
            .collect();
        let redone: Vec<(usize, ProbEstimate)> = refine
            .into_par_iter()
            .map(|i| {
                let t = (cells[i].error * scale).max(settings.target_error * 1e-3);
                let s = settings
                    .clone()
                    .with_target(t)
                    .with_seed(mix_seed(settings.seed, i as u64));
                Ok((i, eval(i, &s)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, c) in redone {
            cells[i] = c;
        }
        total_err = norm(&cells);
    }
    Ok(ProbEstimate { value: cells.iter().map(|c| c.value).sum(), error: total_err })
}

fn stage_vectors(n_arms: usize, stages: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(stages.pow(n_arms as u32));
    let mut cur = vec![1usize; n_arms];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == n_arms {
                return out;
            }
            if cur[i] < stages {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
            i += 1;
        }
    }
}

fn check_shapes(schedule: &AllocationSchedule, boundaries: &BoundaryMatrix) -> Result<()> {
    boundaries.validate()?;
    if boundaries.upper.len() != schedule.n_arms()
        || boundaries.upper.iter().any(|u| u.len() != schedule.stages())
    {
        return Err(DesignError::InvalidSpec(
            "boundary dimensions must match the schedule".into(),
        ));
    }
    Ok(())
}

/// Family-wise error rate under the global null: one minus the probability
/// that no arm ever crosses its upper boundary. With non-binding futility
/// the interim lower limits are ignored here (the error guarantee must hold
/// even if futility stops are overridden).
pub fn fwer_global_null(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    check_shapes(schedule, boundaries)?;
    let b = if boundaries.binding_futility {
        boundaries.clone()
    } else {
        boundaries.without_interim_futility()
    };
    // inclusion-exclusion over the per-arm rejection events: the order-m
    // intersection terms fall off like alpha^m, so almost all of the error
    // budget flows to the cheap low-dimensional single-arm cells
    let kk = schedule.n_arms();
    let stages = schedule.stages();
    let mut cells: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
    for subset in 1u32..(1 << kk) {
        let arms: Vec<usize> = (0..kk).filter(|k| subset >> k & 1 == 1).collect();
        let sign = if arms.len() % 2 == 1 { 1.0 } else { -1.0 };
        for stage_vec in stage_vectors(arms.len(), stages) {
            cells.push((sign, arms.iter().copied().zip(stage_vec).collect()));
        }
    }
    adaptive_cell_sum(cells.len(), settings, |i, s| {
        let (sign, ref assignment) = cells[i];
        let parts: Vec<_> = assignment
            .iter()
            .map(|&(k, j)| (k, j, Exit::Superiority, 0.0))
            .collect();
        let p = joint_prob(schedule, &b, &parts, s)?;
        Ok(ProbEstimate { value: sign * p.value, error: p.error })
    })
}

/// Probability that arm `k` (0-based) crosses its upper boundary at some
/// analysis, when its true standardized effect is `theta`.
pub fn pairwise_power(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    k: usize,
    theta: f64,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    check_shapes(schedule, boundaries)?;
    if theta == f64::NEG_INFINITY {
        return Ok(ProbEstimate::ZERO);
    }
    let stages = schedule.stages();
    let per_cell = settings.clone().with_target(settings.target_error / (stages as f64).sqrt());
    let mut acc = ProbEstimate::ZERO;
    for j in 1..=stages {
        let s = per_cell.clone().with_seed(mix_seed(settings.seed, j as u64));
        acc.add(joint_prob(schedule, boundaries, &[(k, j, Exit::Superiority, theta)], &s)?);
    }
    Ok(acc)
}

/// Probability that every arm with a relevant effect (theta_k >= theta_clin)
/// is declared superior. With no relevant arm the requirement is vacuous.
pub fn conjunctive_power(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    theta: &ScenarioTheta,
    theta_clin: f64,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    check_shapes(schedule, boundaries)?;
    if theta.len() != schedule.n_arms() {
        return Err(DesignError::InvalidSpec("theta length must match arm count".into()));
    }
    let relevant: Vec<usize> = (0..theta.len()).filter(|&k| theta.0[k] >= theta_clin).collect();
    if relevant.is_empty() {
        return Ok(ProbEstimate { value: 1.0, error: 0.0 });
    }
    sum_over_exits(schedule, boundaries, &relevant, &theta.0, Exit::Superiority, settings)
}

/// Probability that at least one arm is declared superior.
pub fn disjunctive_power(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    theta: &ScenarioTheta,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    check_shapes(schedule, boundaries)?;
    if theta.len() != schedule.n_arms() {
        return Err(DesignError::InvalidSpec("theta length must match arm count".into()));
    }
    let active = theta.active_arms();
    if active.is_empty() {
        return Ok(ProbEstimate::ZERO);
    }
    let none = sum_over_exits(schedule, boundaries, &active, &theta.0, Exit::Futility, settings)?;
    Ok(ProbEstimate { value: 1.0 - none.value, error: none.error })
}

/// Sum over all stage vectors of the probability that each listed arm exits
/// at its stage with the given decision, under per-arm drifts.
fn sum_over_exits(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    arms: &[usize],
    theta: &[f64],
    exit: Exit,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    let cells = stage_vectors(arms.len(), schedule.stages());
    adaptive_cell_sum(cells.len(), settings, |i, s| {
        let parts: Vec<_> = arms
            .iter()
            .zip(&cells[i])
            .map(|(&k, &j)| (k, j, exit, theta[k]))
            .collect();
        joint_prob(schedule, boundaries, &parts, s)
    })
}

/// Probability of one fully specified joint outcome. Arms with theta = -inf
/// stop for futility at their first analysis with certainty; a cell saying
/// otherwise has probability zero.
pub fn outcome_probability(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    theta: &ScenarioTheta,
    cell: &OutcomeCell,
    settings: &MvnSettings,
) -> Result<ProbEstimate> {
    check_shapes(schedule, boundaries)?;
    let kk = schedule.n_arms();
    if theta.len() != kk || cell.stages.len() != kk || cell.superiority.len() != kk {
        return Err(DesignError::InvalidSpec("cell dimensions must match arm count".into()));
    }
    if cell.stages.iter().any(|&j| j == 0 || j > schedule.stages()) {
        return Err(DesignError::InvalidSpec("cell stage out of range".into()));
    }
    let mut parts = Vec::new();
    for k in 0..kk {
        if theta.0[k] == f64::NEG_INFINITY {
            if cell.stages[k] != 1 || cell.superiority[k] {
                return Ok(ProbEstimate::ZERO);
            }
        } else {
            let exit = if cell.superiority[k] { Exit::Superiority } else { Exit::Futility };
            parts.push((k, cell.stages[k], exit, theta.0[k]));
        }
    }
    joint_prob(schedule, boundaries, &parts, settings)
}

/// Total patients recruited when each arm exits at the given stage: the sum
/// of active-arm counts plus the shared control count, which is the largest
/// control total any arm's final analysis requires.
pub fn sample_size_of_cell(schedule: &AllocationSchedule, stages: &[usize]) -> u64 {
    let active: u64 = stages
        .iter()
        .enumerate()
        .map(|(k, &j)| schedule.n_active[k][j - 1])
        .sum();
    let control = stages
        .iter()
        .enumerate()
        .map(|(k, &j)| schedule.n_control[k][j - 1])
        .max()
        .unwrap_or(0);
    active + control
}

/// Expected total sample size with per-arm and control breakdowns plus the
/// full distribution of the total.
#[derive(Debug, Clone)]
pub struct EssResult {
    pub expected_total: f64,
    pub error: f64,
    pub expected_per_arm: Vec<f64>,
    pub expected_control: f64,
    /// Probability of each attainable total sample size.
    pub distribution: BTreeMap<u64, f64>,
}

/// Expected sample size under a scenario.
///
/// Exit-stage cell probabilities are assembled from continuation
/// probabilities C(m) = P(every arm passes its first m_k analyses): the
/// event that arm k exits exactly at stage j is the difference of nested
/// continuation events, so each cell is an alternating sum of at most 2^K
/// cached C values, and only (J+1)^K distinct integrals are needed instead
/// of one per (cell, decision) pair.
pub fn expected_sample_size(
    schedule: &AllocationSchedule,
    boundaries: &BoundaryMatrix,
    theta: &ScenarioTheta,
    settings: &MvnSettings,
) -> Result<EssResult> {
    check_shapes(schedule, boundaries)?;
    let kk = schedule.n_arms();
    if theta.len() != kk {
        return Err(DesignError::InvalidSpec("theta length must match arm count".into()));
    }
    let j_max = schedule.stages();
    let active = theta.active_arms();
    let a = active.len();

    // cache C(m) over m in {0..J}^A; m_k = J is impossible (the final
    // analysis forces a decision) and the all-zero vector is the sure event
    let tuples = all_tuples(a, j_max + 1);
    let eval = |i: usize, s: &MvnSettings| -> Result<ProbEstimate> {
        let m = &tuples[i];
        if m.iter().any(|&mk| mk == j_max) {
            return Ok(ProbEstimate::ZERO);
        }
        if m.iter().all(|&mk| mk == 0) {
            return Ok(ProbEstimate { value: 1.0, error: 0.0 });
        }
        let s = s.clone().with_seed(mix_seed(settings.seed, i as u64));
        let parts: Vec<_> = active
            .iter()
            .zip(m)
            .filter(|(_, &mk)| mk > 0)
            .map(|(&k, &mk)| (k, mk, Exit::Continue, theta.0[k]))
            .collect();
        joint_prob(schedule, boundaries, &parts, &s)
    };
    // each C(m) feeds the alternating sums of up to 2^A cells; weigh its
    // error by that multiplicity when budgeting
    let weights: Vec<f64> = tuples
        .iter()
        .map(|m| m.iter().map(|&mk| if mk == 0 || mk == j_max { 1.0 } else { 2.0 }).product())
        .collect();
    let mut cont: Vec<ProbEstimate> = (0..tuples.len())
        .into_par_iter()
        .map(|i| eval(i, settings))
        .collect::<Result<Vec<_>>>()?;
    let model_err = |cs: &[ProbEstimate]| -> f64 {
        cs.iter()
            .zip(&weights)
            .map(|(c, w)| w * c.error * c.error)
            .sum::<f64>()
            .sqrt()
    };
    let total = model_err(&cont);
    if total > settings.target_error {
        let scale = settings.target_error / total;
        let refine: Vec<usize> = (0..tuples.len())
            .filter(|&i| {
                weights[i].sqrt() * cont[i].error
                    > settings.target_error / (tuples.len() as f64).sqrt()
            })
            .collect();
        let redone: Vec<(usize, ProbEstimate)> = refine
            .into_par_iter()
            .map(|i| {
                let t = (cont[i].error * scale).max(settings.target_error * 1e-3);
                Ok((i, eval(i, &settings.clone().with_target(t))?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, c) in redone {
            cont[i] = c;
        }
    }
    // all_tuples counts with the first digit least significant
    let index = |m: &[usize]| -> usize {
        m.iter().rev().fold(0usize, |acc, &d| acc * (j_max + 1) + d)
    };

    let mut distribution = BTreeMap::new();
    let mut expected_total = 0.0;
    let mut err_sq = 0.0;
    let mut expected_per_arm = vec![0.0; kk];
    let mut expected_control = 0.0;
    let mut full_stages = vec![1usize; kk];
    for cell in all_tuples(a, j_max) {
        // cell digits are exit stages minus one for the active arms
        let mut q = ProbEstimate::ZERO;
        let mut m = vec![0usize; a];
        for s in 0..(1u32 << a) {
            for (i, mi) in m.iter_mut().enumerate() {
                *mi = cell[i] + ((s >> i) & 1) as usize;
            }
            let c = cont[index(&m)];
            if s.count_ones() % 2 == 0 {
                q.value += c.value;
            } else {
                q.value -= c.value;
            }
            err_sq += c.error * c.error;
        }
        if q.value < 0.0 {
            q.value = 0.0;
        }
        for (i, &k) in active.iter().enumerate() {
            full_stages[k] = cell[i] + 1;
        }
        for (k, &j) in full_stages.iter().enumerate() {
            expected_per_arm[k] += q.value * schedule.n_active[k][j - 1] as f64;
        }
        let control = full_stages
            .iter()
            .enumerate()
            .map(|(k, &j)| schedule.n_control[k][j - 1])
            .max()
            .unwrap_or(0);
        expected_control += q.value * control as f64;
        let total = sample_size_of_cell(schedule, &full_stages);
        expected_total += q.value * total as f64;
        *distribution.entry(total).or_insert(0.0) += q.value;
    }
    let max_n = sample_size_of_cell(schedule, &vec![j_max; kk]) as f64;
    Ok(EssResult {
        expected_total,
        error: err_sq.sqrt() * max_n,
        expected_per_arm,
        expected_control,
        distribution,
    })
}

fn all_tuples(len: usize, base: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::with_capacity(base.pow(len as u32));
    let mut cur = vec![0usize; len];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == len {
                return out;
            }
            if cur[i] + 1 < base {
                cur[i] += 1;
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_schedule, AddingTimes, BoundaryShape, DesignSpec, PowerMode};
    use crate::mvn::cdf;

    fn flair_spec() -> DesignSpec {
        DesignSpec {
            n_arms: 2,
            stages: 2,
            adding: AddingTimes::Fractions(vec![0.0, 1.0]),
            alpha: 0.025,
            beta: 0.2,
            theta_clin: -(0.69f64.ln()),
            sigma: 1.0,
            boundary_shape: BoundaryShape::TriangularBinding,
            power_mode: PowerMode::Pairwise,
        }
    }

    fn triangular(a: f64, arms: usize, stages: usize, binding: bool) -> BoundaryMatrix {
        let jf = stages as f64;
        let upper: Vec<f64> = (1..=stages)
            .map(|j| {
                let t = j as f64 / jf;
                a * (1.0 + t) / (2.0 * t.sqrt())
            })
            .collect();
        let lower: Vec<f64> = (1..=stages)
            .map(|j| {
                let t = j as f64 / jf;
                a * (3.0 * t - 1.0) / (2.0 * t.sqrt())
            })
            .collect();
        BoundaryMatrix {
            upper: vec![upper; arms],
            lower: vec![lower; arms],
            binding_futility: binding,
        }
    }

    fn settings() -> MvnSettings {
        MvnSettings::default().with_target(2e-6)
    }

    #[test]
    fn single_stage_single_arm_fwer_is_exact() {
        // one arm, one look: FWER = 1 - Phi(u)
        let sched = crate::model::schedule_from_counts(1, 1, 100, &[0]).unwrap();
        let b = BoundaryMatrix {
            upper: vec![vec![1.96]],
            lower: vec![vec![1.96]],
            binding_futility: true,
        };
        let f = fwer_global_null(&sched, &b, &settings()).unwrap();
        assert!((f.value - (1.0 - cdf(1.96))).abs() < 1e-5, "{}", f.value);
    }

    #[test]
    fn flair_fwer_matches_published_boundary() {
        // two arms, two stages, triangular a = 2.358 controls FWER at 0.025
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let f = fwer_global_null(&sched, &b, &settings()).unwrap();
        assert!((f.value - 0.025).abs() < 5e-4, "fwer {}", f.value);
    }

    #[test]
    fn nonbinding_fwer_exceeds_binding() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let a = 2.358;
        let binding = fwer_global_null(&sched, &triangular(a, 2, 2, true), &settings()).unwrap();
        let nonbind =
            fwer_global_null(&sched, &triangular(a, 2, 2, false), &settings()).unwrap();
        assert!(nonbind.value > binding.value);
    }

    #[test]
    fn pairwise_power_single_stage_closed_form() {
        // power = Phi(theta*sqrt(n/2) - u)
        let sched = crate::model::schedule_from_counts(1, 1, 115, &[0]).unwrap();
        let u = crate::mvn::quantile(0.975).unwrap();
        let b = BoundaryMatrix {
            upper: vec![vec![u]],
            lower: vec![vec![u]],
            binding_futility: true,
        };
        let theta = -(0.69f64.ln());
        let p = pairwise_power(&sched, &b, 0, theta, &settings()).unwrap();
        let want = cdf(theta * (115.0f64 / 2.0).sqrt() - u);
        assert!((p.value - want).abs() < 1e-5, "{} vs {want}", p.value);
    }

    #[test]
    fn pairwise_power_flair_value() {
        // n = 76 with a = 2.358 gives pairwise power near 0.80
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let theta = -(0.69f64.ln());
        let p = pairwise_power(&sched, &b, 0, theta, &settings()).unwrap();
        assert!((p.value - 0.80).abs() < 0.005, "power {}", p.value);
    }

    #[test]
    fn power_under_null_is_near_alpha_per_arm() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let p = pairwise_power(&sched, &b, 0, 0.0, &settings()).unwrap();
        assert!(p.value < 0.025 && p.value > 0.005, "{}", p.value);
    }

    #[test]
    fn conjunctive_no_relevant_arm_is_one() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let theta = ScenarioTheta::new(vec![0.0, 0.0]).unwrap();
        let p = conjunctive_power(&sched, &b, &theta, 0.3710637, &settings()).unwrap();
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn conjunctive_below_pairwise_when_both_relevant() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let th = -(0.69f64.ln());
        let theta = ScenarioTheta::new(vec![th, th]).unwrap();
        let conj = conjunctive_power(&sched, &b, &theta, th, &settings()).unwrap();
        let pw = pairwise_power(&sched, &b, 0, th, &settings()).unwrap();
        let dis = disjunctive_power(&sched, &b, &theta, &settings()).unwrap();
        assert!(conj.value < pw.value);
        assert!(dis.value > pw.value);
    }

    #[test]
    fn disjunctive_with_one_dead_arm_matches_pairwise() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let th = -(0.69f64.ln());
        let theta = ScenarioTheta::new(vec![th, f64::NEG_INFINITY]).unwrap();
        let dis = disjunctive_power(&sched, &b, &theta, &settings()).unwrap();
        let pw = pairwise_power(&sched, &b, 0, th, &settings()).unwrap();
        assert!((dis.value - pw.value).abs() < 1e-5);
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let th = -(0.69f64.ln());
        let theta = ScenarioTheta::new(vec![th, 0.0]).unwrap();
        let mut total = 0.0;
        for j1 in 1..=2 {
            for j2 in 1..=2 {
                for q1 in [false, true] {
                    for q2 in [false, true] {
                        let cell = OutcomeCell {
                            stages: vec![j1, j2],
                            superiority: vec![q1, q2],
                        };
                        total +=
                            outcome_probability(&sched, &b, &theta, &cell, &settings())
                                .unwrap()
                                .value;
                    }
                }
            }
        }
        assert!((total - 1.0).abs() < 2e-5, "total {total}");
    }

    #[test]
    fn sample_size_of_cells() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        // both arms to the final stage: 152 + 152 + 228 controls
        assert_eq!(sample_size_of_cell(&sched, &[2, 2]), 532);
        // both stop at the first look: 76 + 76 + 152 controls
        assert_eq!(sample_size_of_cell(&sched, &[1, 1]), 304);
    }

    #[test]
    fn ess_distribution_consistent() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let th = -(0.69f64.ln());
        let theta = ScenarioTheta::new(vec![th, th]).unwrap();
        let ess = expected_sample_size(&sched, &b, &theta, &settings()).unwrap();
        let mass: f64 = ess.distribution.values().sum();
        assert!((mass - 1.0).abs() < 2e-5, "mass {mass}");
        let mean: f64 = ess.distribution.iter().map(|(&n, &p)| n as f64 * p).sum();
        assert!((mean - ess.expected_total).abs() < 1e-9);
        assert!(ess.expected_total > 304.0 && ess.expected_total < 532.0);
        // cross-check against the decision-resolved outcome route
        let mut direct = 0.0;
        for j1 in 1..=2 {
            for j2 in 1..=2 {
                for q1 in [false, true] {
                    for q2 in [false, true] {
                        let cell = OutcomeCell {
                            stages: vec![j1, j2],
                            superiority: vec![q1, q2],
                        };
                        let p = outcome_probability(&sched, &b, &theta, &cell, &settings())
                            .unwrap()
                            .value;
                        direct += p * sample_size_of_cell(&sched, &cell.stages) as f64;
                    }
                }
            }
        }
        assert!(
            (direct - ess.expected_total).abs() < 0.05,
            "direct {direct} vs cached {}",
            ess.expected_total
        );
    }

    #[test]
    fn ess_with_dead_arm() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = triangular(2.358, 2, 2, true);
        let theta = ScenarioTheta::new(vec![0.0, f64::NEG_INFINITY]).unwrap();
        let ess = expected_sample_size(&sched, &b, &theta, &settings()).unwrap();
        // arm 2 always stops at its first look with 76 patients
        assert!((ess.expected_per_arm[1] - 76.0).abs() < 1e-9);
        assert!(ess.expected_total >= 304.0 && ess.expected_total <= 456.0);
    }
}
