//! Domain types for the platform design and the joint correlation structure
//! among all stagewise test statistics.

use crate::error::{DesignError, Result};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

/// Boundary shape families supported by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryShape {
    TriangularBinding,
    TriangularNonBinding,
    OBrienFlemingZeroFutility,
    PocockZeroFutility,
}

impl BoundaryShape {
    pub fn binding_futility(self) -> bool {
        !matches!(self, BoundaryShape::TriangularNonBinding)
    }
}

/// Which notion of power the design is sized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMode {
    Pairwise,
    Conjunctive,
    Disjunctive,
}

/// When each arm joins the platform: either absolute control patient counts
/// n(k), or fractions of the per-arm per-stage size n (so ratios are fixed
/// while n varies during sizing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddingTimes {
    Patients(Vec<u64>),
    Fractions(Vec<f64>),
}

impl AddingTimes {
    pub fn len(&self) -> usize {
        match self {
            AddingTimes::Patients(v) => v.len(),
            AddingTimes::Fractions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Full specification of a platform design problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSpec {
    pub n_arms: usize,
    pub stages: usize,
    pub adding: AddingTimes,
    /// One-sided family-wise error target.
    pub alpha: f64,
    /// One minus the target power.
    pub beta: f64,
    /// Clinically relevant standardized effect (raw effect / sigma).
    pub theta_clin: f64,
    pub sigma: f64,
    pub boundary_shape: BoundaryShape,
    pub power_mode: PowerMode,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_arms == 0 {
            return Err(DesignError::InvalidSpec("need at least one arm".into()));
        }
        if self.stages == 0 {
            return Err(DesignError::InvalidSpec("need at least one stage".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DesignError::InvalidSpec("alpha must lie in (0,1)".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(DesignError::InvalidSpec("beta must lie in (0,1)".into()));
        }
        if !(self.theta_clin > 0.0) {
            return Err(DesignError::InvalidSpec("theta_clin must be positive".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(DesignError::InvalidSpec("sigma must be positive".into()));
        }
        if self.adding.len() != self.n_arms {
            return Err(DesignError::InvalidSpec(
                "adding times must list one entry per arm".into(),
            ));
        }
        match &self.adding {
            AddingTimes::Patients(v) => {
                if v[0] != 0 {
                    return Err(DesignError::InvalidSpec(
                        "the first arm must start the trial (n(1) = 0)".into(),
                    ));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(DesignError::InvalidSpec(
                        "adding times must be nondecreasing".into(),
                    ));
                }
            }
            AddingTimes::Fractions(v) => {
                if v[0] != 0.0 {
                    return Err(DesignError::InvalidSpec(
                        "the first arm must start the trial (fraction 0)".into(),
                    ));
                }
                if v.iter().any(|&f| f < 0.0 || !f.is_finite()) {
                    return Err(DesignError::InvalidSpec(
                        "adding fractions must be finite and nonnegative".into(),
                    ));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(DesignError::InvalidSpec(
                        "adding fractions must be nondecreasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Standardized clinically relevant effect (sigma is folded in here; all
    /// internal computations use sigma = 1).
    pub fn theta_standardized(&self) -> f64 {
        self.theta_clin / self.sigma
    }
}

/// Patient counts and dimensionless ratios for every arm and stage.
///
/// `n_active[k][j-1]` is the cumulative count on arm k at its j-th analysis,
/// `n_control[k][j-1]` the cumulative control count at that analysis, and
/// `n_before[k]` the control patients recruited before arm k joined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSchedule {
    pub n_active: Vec<Vec<u64>>,
    pub n_control: Vec<Vec<u64>>,
    pub n_before: Vec<u64>,
    pub r_active: Vec<Vec<f64>>,
    pub r_control: Vec<Vec<f64>>,
    pub r_before: Vec<f64>,
    /// First-stage per-arm size n.
    pub stage_size: u64,
}

impl AllocationSchedule {
    pub fn n_arms(&self) -> usize {
        self.n_active.len()
    }

    pub fn stages(&self) -> usize {
        self.n_active[0].len()
    }

    /// Concurrent-control count for arm `k` (0-based) at its stage `j`
    /// (1-based): n_{0,k,j} - n(k).
    pub fn concurrent_controls(&self, k: usize, j: usize) -> u64 {
        self.n_control[k][j - 1] - self.n_before[k]
    }

    pub fn validate(&self) -> Result<()> {
        let kk = self.n_arms();
        if self.n_control.len() != kk || self.n_before.len() != kk {
            return Err(DesignError::InvalidSpec("schedule arm counts disagree".into()));
        }
        for k in 0..kk {
            let j_max = self.n_active[k].len();
            if j_max == 0 || self.n_control[k].len() != j_max {
                return Err(DesignError::InvalidSpec("schedule stage counts disagree".into()));
            }
            if self.n_active[k].windows(2).any(|w| w[1] <= w[0]) {
                return Err(DesignError::InvalidSpec(
                    "active counts must be strictly increasing in stage".into(),
                ));
            }
            if self.n_control[k].windows(2).any(|w| w[1] <= w[0]) {
                return Err(DesignError::InvalidSpec(
                    "control counts must be strictly increasing in stage".into(),
                ));
            }
            if self.n_control[k].iter().any(|&c| c <= self.n_before[k]) {
                return Err(DesignError::InvalidSpec(
                    "every analysis needs concurrent controls (n_{0,k,j} > n(k))".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-arm upper and lower stopping boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatrix {
    pub upper: Vec<Vec<f64>>,
    pub lower: Vec<Vec<f64>>,
    pub binding_futility: bool,
}

impl BoundaryMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.upper.len() != self.lower.len() || self.upper.is_empty() {
            return Err(DesignError::InvalidSpec("boundary arm counts disagree".into()));
        }
        for (u, l) in self.upper.iter().zip(&self.lower) {
            let j_max = u.len();
            if j_max == 0 || l.len() != j_max {
                return Err(DesignError::InvalidSpec("boundary stage counts disagree".into()));
            }
            for j in 0..j_max {
                if !(l[j] <= u[j]) {
                    return Err(DesignError::InvalidSpec(
                        "lower boundary exceeds upper boundary".into(),
                    ));
                }
                if j + 1 < j_max && (!u[j].is_finite() || !l[j].is_finite()) {
                    return Err(DesignError::InvalidSpec(
                        "interim boundaries must be finite".into(),
                    ));
                }
            }
            if (u[j_max - 1] - l[j_max - 1]).abs() > 1e-9 {
                return Err(DesignError::InvalidSpec(
                    "the final analysis must force a decision (l = u)".into(),
                ));
            }
        }
        Ok(())
    }

    /// Copy with interim futility limits dropped to -inf, used for the
    /// type I error computation when futility is non-binding.
    pub fn without_interim_futility(&self) -> BoundaryMatrix {
        let mut out = self.clone();
        for row in &mut out.lower {
            let last = row.len() - 1;
            for l in row.iter_mut().take(last) {
                *l = f64::NEG_INFINITY;
            }
        }
        out
    }
}

/// Vector of true standardized effects; entries may be -inf (the arm is
/// certain to stop for futility at its first analysis).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTheta(pub Vec<f64>);

impl ScenarioTheta {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
            return Err(DesignError::InvalidSpec(
                "effects must be finite or -inf".into(),
            ));
        }
        Ok(ScenarioTheta(theta))
    }

    pub fn uniform(k: usize, theta: f64) -> Self {
        ScenarioTheta(vec![theta; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Arms whose statistics enter joint integrals.
    pub fn active_arms(&self) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&k| self.0[k] != f64::NEG_INFINITY)
            .collect()
    }
}

/// A joint trial outcome: each arm k exits at stage `stages[k]` with
/// `superiority[k]` telling whether it crossed the upper boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeCell {
    pub stages: Vec<usize>,
    pub superiority: Vec<bool>,
}

/// Build the equal-allocation schedule for per-arm per-stage size `n`.
///
/// Fractions are interpreted relative to n and rounded half-up to integer
/// patient counts.
pub fn build_schedule(spec: &DesignSpec, n: u64) -> Result<AllocationSchedule> {
    spec.validate()?;
    if n == 0 {
        return Err(DesignError::InvalidSpec("stage size must be at least 1".into()));
    }
    let n_before: Vec<u64> = match &spec.adding {
        AddingTimes::Patients(v) => v.clone(),
        AddingTimes::Fractions(v) => v
            .iter()
            .map(|f| (f * n as f64 + 0.5).floor() as u64)
            .collect(),
    };
    schedule_from_counts(spec.n_arms, spec.stages, n, &n_before)
}

/// Equal-allocation schedule from explicit adding counts.
pub fn schedule_from_counts(
    n_arms: usize,
    stages: usize,
    n: u64,
    n_before: &[u64],
) -> Result<AllocationSchedule> {
    if n_before.len() != n_arms {
        return Err(DesignError::InvalidSpec(
            "adding times must list one entry per arm".into(),
        ));
    }
    let nf = n as f64;
    let mut n_active = Vec::with_capacity(n_arms);
    let mut n_control = Vec::with_capacity(n_arms);
    for k in 0..n_arms {
        let act: Vec<u64> = (1..=stages as u64).map(|j| j * n).collect();
        let ctl: Vec<u64> = act.iter().map(|&a| n_before[k] + a).collect();
        n_active.push(act);
        n_control.push(ctl);
    }
    let sched = AllocationSchedule {
        r_active: n_active
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / nf).collect())
            .collect(),
        r_control: n_control
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / nf).collect())
            .collect(),
        r_before: n_before.iter().map(|&c| c as f64 / nf).collect(),
        n_active,
        n_control,
        n_before: n_before.to_vec(),
        stage_size: n,
    };
    sched.validate()?;
    Ok(sched)
}

/// Information for arm `k` (0-based) at stage `j` (1-based):
/// I = sigma^2 (n_{k,j}^{-1} + (n_{0,k,j} - n(k))^{-1}).
pub fn information(schedule: &AllocationSchedule, sigma: f64, k: usize, j: usize) -> f64 {
    let n_act = schedule.n_active[k][j - 1] as f64;
    let n_con = schedule.concurrent_controls(k, j) as f64;
    sigma * sigma * (1.0 / n_act + 1.0 / n_con)
}

/// Mean shift of Z_{k,j} under standardized effect theta: theta / sqrt(I).
pub fn drift(schedule: &AllocationSchedule, k: usize, j: usize, theta: f64) -> f64 {
    if theta == 0.0 {
        0.0
    } else {
        theta / information(schedule, 1.0, k, j).sqrt()
    }
}

#[inline]
fn v_ratio(schedule: &AllocationSchedule, k: usize, j: usize) -> f64 {
    let r_act = schedule.r_active[k][j - 1];
    let r_con = schedule.r_control[k][j - 1] - schedule.r_before[k];
    (1.0 / r_act + 1.0 / r_con).sqrt()
}

/// Correlation between Z_{k,j} and Z_{k2,j2} (arms 0-based, stages 1-based).
pub fn correlation_entry(
    schedule: &AllocationSchedule,
    k: usize,
    j: usize,
    k2: usize,
    j2: usize,
) -> f64 {
    if k == k2 {
        if j == j2 {
            return 1.0;
        }
        let (lo, hi) = if j < j2 { (j, j2) } else { (j2, j) };
        // within-arm case reduces to v(hi) / v(lo)
        return v_ratio(schedule, k, hi) / v_ratio(schedule, k, lo);
    }
    // order so that arm `a` joined no later than arm `b`
    let (a, ja, b, jb) = if schedule.n_before[k] <= schedule.n_before[k2] {
        (k, j, k2, j2)
    } else {
        (k2, j2, k, j)
    };
    let r_b_before = schedule.r_before[b];
    let shared = (schedule.r_control[a][ja - 1].min(schedule.r_control[b][jb - 1]) - r_b_before)
        .max(0.0);
    if shared == 0.0 {
        return 0.0;
    }
    let den_a = schedule.r_control[a][ja - 1] - schedule.r_before[a];
    let den_b = schedule.r_control[b][jb - 1] - r_b_before;
    let rho = shared / (v_ratio(schedule, a, ja) * v_ratio(schedule, b, jb) * den_a * den_b);
    rho.max(0.0)
}

/// Correlation matrix for an explicit list of (arm, stage) labels.
pub fn correlation_for_labels(
    schedule: &AllocationSchedule,
    labels: &[(usize, usize)],
) -> Matrix {
    Matrix::from_fn(labels.len(), |i, j| {
        let (k, s) = labels[i];
        let (k2, s2) = labels[j];
        correlation_entry(schedule, k, s, k2, s2)
    })
}

/// Joint correlation matrix for stage vector `stage_vector` (1-based exit
/// stages per arm): one row/column per (arm, stage <= exit stage) pair, arms
/// in order.
pub fn correlation_matrix(
    schedule: &AllocationSchedule,
    stage_vector: &[usize],
) -> Result<Matrix> {
    if stage_vector.len() != schedule.n_arms() {
        return Err(DesignError::InvalidSpec(
            "stage vector length must equal the number of arms".into(),
        ));
    }
    let j_max = schedule.stages();
    if stage_vector.iter().any(|&j| j == 0 || j > j_max) {
        return Err(DesignError::InvalidSpec("stage vector out of range".into()));
    }
    let mut labels = Vec::new();
    for (k, &jk) in stage_vector.iter().enumerate() {
        for j in 1..=jk {
            labels.push((k, j));
        }
    }
    let m = correlation_for_labels(schedule, &labels);
    if !psd_check(&m) {
        return Err(DesignError::NotPositiveSemidefinite);
    }
    Ok(m)
}

/// Cholesky-based PSD test with a small tolerance for roundoff.
fn psd_check(m: &Matrix) -> bool {
    let d = m.dim();
    let mut l = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for t in 0..j {
                s -= l.get(i, t) * l.get(j, t);
            }
            if i == j {
                if s < -1e-8 {
                    return false;
                }
                l.set(i, i, s.max(0.0).sqrt());
            } else if l.get(j, j) > 1e-12 {
                l.set(i, j, s / l.get(j, j));
            } else {
                l.set(i, j, 0.0);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn table1_pairwise_schedule() {
        let s = build_schedule(&flair_spec(), 76).unwrap();
        assert_eq!(s.n_active, vec![vec![76, 152], vec![76, 152]]);
        assert_eq!(s.n_control, vec![vec![76, 152], vec![152, 228]]);
        assert_eq!(s.n_before, vec![0, 76]);
    }

    #[test]
    fn table1_conjunctive_schedule() {
        let s = build_schedule(&flair_spec(), 96).unwrap();
        assert_eq!(s.n_control[1], vec![192, 288]);
    }

    #[test]
    fn single_arm_identity() {
        let spec = DesignSpec {
            n_arms: 1,
            stages: 1,
            adding: AddingTimes::Patients(vec![0]),
            ..flair_spec()
        };
        let s = build_schedule(&spec, 10).unwrap();
        assert_eq!(s.n_active[0][0], 10);
        assert_eq!(s.n_control[0][0], 10);
    }

    #[test]
    fn information_values() {
        let s = build_schedule(&flair_spec(), 76).unwrap();
        assert!((information(&s, 1.0, 0, 1) - 2.0 / 76.0).abs() < 1e-15);
        assert!((information(&s, 1.0, 0, 2) - 2.0 / 152.0).abs() < 1e-15);
        assert!((information(&s, 1.0, 1, 1) - 2.0 / 76.0).abs() < 1e-15);
        // drift at the first analysis
        let theta = -(0.69f64.ln());
        let d = drift(&s, 0, 1, theta);
        assert!((d - 2.2875).abs() < 5e-4, "drift {d}");
    }

    #[test]
    fn information_decreasing_in_stage() {
        let s = build_schedule(&flair_spec(), 76).unwrap();
        assert!(information(&s, 1.0, 0, 2) < information(&s, 1.0, 0, 1));
    }

    #[test]
    fn within_arm_correlation_flair() {
        let s = build_schedule(&flair_spec(), 76).unwrap();
        let rho = correlation_entry(&s, 0, 1, 0, 2);
        assert!((rho - (0.5f64).sqrt()).abs() < 1e-12, "rho {rho}");
    }

    #[test]
    fn disjoint_windows_zero_correlation() {
        // arm 2 added after arm 1 finished: no shared controls at any stage
        let sched = schedule_from_counts(2, 2, 76, &[0, 152]).unwrap();
        for j in 1..=2 {
            for j2 in 1..=2 {
                let rho = correlation_entry(&sched, 0, j, 1, j2);
                if j == 2 && j2 >= 1 {
                    // arm 1's second analysis at control 152 = arm 2's entry
                    assert_eq!(rho, 0.0);
                }
            }
        }
        assert_eq!(correlation_entry(&sched, 0, 1, 1, 1), 0.0);
    }

    #[test]
    fn correlation_matrix_properties() {
        let s = build_schedule(&flair_spec(), 76).unwrap();
        let m = correlation_matrix(&s, &[2, 2]).unwrap();
        assert_eq!(m.dim(), 4);
        assert!(m.is_symmetric(1e-14));
        assert!(m.has_unit_diagonal(1e-14));
        for i in 0..4 {
            for j in 0..4 {
                let v = m.get(i, j);
                assert!((0.0..=1.0).contains(&v), "entry ({i},{j}) = {v}");
            }
        }
        // symmetry of the cross-arm block regardless of argument order
        assert!(
            (correlation_entry(&s, 0, 2, 1, 1) - correlation_entry(&s, 1, 1, 0, 2)).abs()
                < 1e-15
        );
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut spec = flair_spec();
        spec.alpha = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = flair_spec();
        spec.adding = AddingTimes::Patients(vec![10, 76]);
        assert!(spec.validate().is_err());
        let mut spec = flair_spec();
        spec.adding = AddingTimes::Patients(vec![0, 76, 80]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn boundary_matrix_validation() {
        let good = BoundaryMatrix {
            upper: vec![vec![2.5, 2.3]],
            lower: vec![vec![0.8, 2.3]],
            binding_futility: true,
        };
        assert!(good.validate().is_ok());
        let bad = BoundaryMatrix {
            upper: vec![vec![2.5, 2.3]],
            lower: vec![vec![0.8, 2.0]],
            binding_futility: true,
        };
        assert!(bad.validate().is_err());
    }
}
