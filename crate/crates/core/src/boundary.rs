//! Stopping-boundary shape families and the critical-value solver.
//!
//! Each family is a one-parameter curve; the solver finds the scale `a` at
//! which the family-wise error rate under the global null equals alpha.

use crate::error::{DesignError, Result};
use crate::model::{AllocationSchedule, BoundaryMatrix, BoundaryShape};
use crate::mvn::MvnSettings;
use crate::oc::fwer_global_null;

/// Boundary values for the given family at scale `a`, on the information
/// fractions t_j = j/J. The final lower and upper values coincide so the
/// last analysis always yields a decision.
pub fn shape(family: BoundaryShape, n_arms: usize, stages: usize, a: f64) -> BoundaryMatrix {
    let jf = stages as f64;
    let (upper, lower): (Vec<f64>, Vec<f64>) = match family {
        BoundaryShape::TriangularBinding | BoundaryShape::TriangularNonBinding => (1..=stages)
            .map(|j| {
                let t = j as f64 / jf;
                let s = t.sqrt();
                (a * (1.0 + t) / (2.0 * s), a * (3.0 * t - 1.0) / (2.0 * s))
            })
            .unzip(),
        BoundaryShape::OBrienFlemingZeroFutility => (1..=stages)
            .map(|j| {
                let t = j as f64 / jf;
                let u = a / t.sqrt();
                (u, if j == stages { u } else { 0.0 })
            })
            .unzip(),
        BoundaryShape::PocockZeroFutility => (1..=stages)
            .map(|j| (a, if j == stages { a } else { 0.0 }))
            .unzip(),
    };
    BoundaryMatrix {
        upper: vec![upper; n_arms],
        lower: vec![lower; n_arms],
        binding_futility: family.binding_futility(),
    }
}

/// Solve for the scale a* with FWER(a*) = alpha on the given schedule.
///
/// The error rate is strictly decreasing in `a`, so a safeguarded secant
/// iteration inside an expanding bracket converges reliably. `a_hint` warm
/// starts the bracket (useful when re-solving across nearby schedules).
pub fn solve_boundaries(
    schedule: &AllocationSchedule,
    family: BoundaryShape,
    alpha: f64,
    settings: &MvnSettings,
    a_hint: Option<f64>,
) -> Result<BoundaryMatrix> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DesignError::InvalidSpec("alpha must lie in (0,1)".into()));
    }
    let n_arms = schedule.n_arms();
    let stages = schedule.stages();
    let excess = |a: f64, s: &MvnSettings| -> Result<f64> {
        let b = shape(family, n_arms, stages, a);
        Ok(fwer_global_null(schedule, &b, s)?.value - alpha)
    };

    // start near a multiplicity-adjusted normal quantile, or the hint
    let guess = match a_hint {
        Some(h) if h.is_finite() && h > 0.0 => h,
        _ => crate::mvn::quantile((1.0 - alpha).powf(1.0 / n_arms as f64))?,
    };
    let span = if a_hint.is_some() { 0.08 } else { 0.5 };
    let (mut lo, mut hi) = ((guess - span).max(0.05), guess + span);

    // phase one: cheap evaluations to localize the root
    let coarse = settings
        .clone()
        .with_target((settings.target_error * 30.0).clamp(settings.target_error, 2e-4));
    let mut f_lo = excess(lo, &coarse)?;
    let mut f_hi = excess(hi, &coarse)?;
    for _ in 0..60 {
        if f_lo > 0.0 && f_hi < 0.0 {
            break;
        }
        if f_lo <= 0.0 {
            lo = (lo - 0.5).max(lo * 0.5).max(1e-3);
            f_lo = excess(lo, &coarse)?;
        }
        if f_hi >= 0.0 {
            hi += 0.5;
            f_hi = excess(hi, &coarse)?;
        }
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(DesignError::BracketFailure(format!(
            "could not bracket the critical scale: [{lo}, {hi}] gives excess [{f_lo}, {f_hi}]"
        )));
    }
    let coarse_tol = 3.0 * coarse.target_error.max(1e-7);
    illinois(&mut lo, &mut hi, &mut f_lo, &mut f_hi, coarse_tol, 40, |a| excess(a, &coarse))?;

    // phase two: polish at full accuracy inside the localized bracket
    let fine_tol = 4.0 * settings.target_error.max(1e-7);
    // pad past the coarse phase's possible bias so the fine bracket straddles;
    // the bias is roughly the coarse tolerance over the local slope
    let slope = ((f_hi - f_lo) / (hi - lo)).abs().max(1e-3);
    let pad = (hi - lo).max((3.0 * coarse_tol / slope).clamp(6e-3, 0.2));
    lo -= pad;
    hi += pad;
    f_lo = excess(lo, settings)?;
    f_hi = excess(hi, settings)?;
    for _ in 0..20 {
        if f_lo > 0.0 && f_hi < 0.0 {
            break;
        }
        if f_lo <= 0.0 {
            lo -= 0.05;
            f_lo = excess(lo, settings)?;
        }
        if f_hi >= 0.0 {
            hi += 0.05;
            f_hi = excess(hi, settings)?;
        }
    }
    let a = illinois(&mut lo, &mut hi, &mut f_lo, &mut f_hi, fine_tol, 40, |a| {
        excess(a, settings)
    })?;
    Ok(shape(family, n_arms, stages, a))
}

/// Illinois-variant false position on a bracketing pair; returns the last
/// iterate once |f| <= tol or the bracket collapses.
fn illinois(
    lo: &mut f64,
    hi: &mut f64,
    f_lo: &mut f64,
    f_hi: &mut f64,
    tol: f64,
    max_iter: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    if f_lo.abs() <= tol {
        return Ok(*lo);
    }
    if f_hi.abs() <= tol {
        return Ok(*hi);
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = *lo - *f_lo * (*hi - *lo) / (*f_hi - *f_lo);
        let x = x.clamp(*lo + (*hi - *lo) * 1e-3, *hi - (*hi - *lo) * 1e-3);
        let fx = f(x)?;
        if fx.abs() <= tol || *hi - *lo < 1e-10 {
            // shrink the bracket around the root before returning
            if fx > 0.0 {
                *lo = x;
                *f_lo = fx;
            } else {
                *hi = x;
                *f_hi = fx;
            }
            return Ok(x);
        }
        if fx > 0.0 {
            *lo = x;
            *f_lo = fx;
            if side == 1 {
                *f_hi *= 0.5;
            }
            side = 1;
        } else {
            *hi = x;
            *f_hi = fx;
            if side == -1 {
                *f_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(DesignError::NonConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_schedule, AddingTimes, DesignSpec, PowerMode};
    use crate::mvn::quantile;

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

    fn settings() -> MvnSettings {
        MvnSettings::default().with_target(2e-6)
    }

    #[test]
    fn triangular_shape_values() {
        let b = shape(BoundaryShape::TriangularBinding, 1, 2, 2.358);
        let u = &b.upper[0];
        let l = &b.lower[0];
        assert!((u[0] - 2.501).abs() < 5e-4, "u1 {}", u[0]);
        assert!((u[1] - 2.358).abs() < 1e-12);
        assert!((l[0] - u[0] / 3.0).abs() < 1e-12);
        assert!((l[1] - u[1]).abs() < 1e-12);
        assert!(b.validate().is_ok());
        assert!(b.binding_futility);
    }

    #[test]
    fn nonbinding_same_values_different_flag() {
        let b = shape(BoundaryShape::TriangularBinding, 1, 2, 2.0);
        let nb = shape(BoundaryShape::TriangularNonBinding, 1, 2, 2.0);
        assert_eq!(b.upper, nb.upper);
        assert_eq!(b.lower, nb.lower);
        assert!(!nb.binding_futility);
    }

    #[test]
    fn obf_and_pocock_shapes() {
        let obf = shape(BoundaryShape::OBrienFlemingZeroFutility, 1, 3, 2.0);
        assert!((obf.upper[0][0] - 2.0 * (3.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(obf.lower[0][0], 0.0);
        assert!((obf.upper[0][2] - obf.lower[0][2]).abs() < 1e-12);
        let poc = shape(BoundaryShape::PocockZeroFutility, 1, 3, 2.0);
        assert!(poc.upper[0].iter().all(|&u| u == 2.0));
        assert_eq!(poc.lower[0][1], 0.0);
    }

    #[test]
    fn single_stage_solver_recovers_normal_quantile() {
        // one arm, one look: a* = Phi^{-1}(1 - alpha)
        let sched = crate::model::schedule_from_counts(1, 1, 100, &[0]).unwrap();
        let b = solve_boundaries(
            &sched,
            BoundaryShape::PocockZeroFutility,
            0.025,
            &settings(),
            None,
        )
        .unwrap();
        let want = quantile(0.975).unwrap();
        assert!((b.upper[0][0] - want).abs() < 2e-4, "{}", b.upper[0][0]);
    }

    #[test]
    fn flair_triangular_scale() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let b = solve_boundaries(
            &sched,
            BoundaryShape::TriangularBinding,
            0.025,
            &settings(),
            None,
        )
        .unwrap();
        let a = b.upper[0][1];
        assert!((a - 2.358).abs() < 2e-3, "a* {a}");
        let f = fwer_global_null(&sched, &b, &settings()).unwrap();
        assert!((f.value - 0.025).abs() < 1e-4, "fwer {}", f.value);
    }

    #[test]
    fn nonbinding_scale_exceeds_binding() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let bb = solve_boundaries(
            &sched,
            BoundaryShape::TriangularBinding,
            0.025,
            &settings(),
            None,
        )
        .unwrap();
        let nb = solve_boundaries(
            &sched,
            BoundaryShape::TriangularNonBinding,
            0.025,
            &settings(),
            Some(bb.upper[0][1]),
        )
        .unwrap();
        assert!(nb.upper[0][1] > bb.upper[0][1]);
    }

    #[test]
    fn hint_matches_cold_start() {
        let sched = build_schedule(&flair_spec(), 76).unwrap();
        let cold = solve_boundaries(
            &sched,
            BoundaryShape::TriangularBinding,
            0.025,
            &settings(),
            None,
        )
        .unwrap();
        let warm = solve_boundaries(
            &sched,
            BoundaryShape::TriangularBinding,
            0.025,
            &settings(),
            Some(2.3),
        )
        .unwrap();
        assert!((cold.upper[0][1] - warm.upper[0][1]).abs() < 5e-4);
    }
}
