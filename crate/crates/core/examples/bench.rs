use plattrial::*;
use plattrial::comparator::*;
use plattrial::sizer::EngineSettings;

fn main() {
    let th = -(0.69f64.ln());
    let scan_settings = EngineSettings::scan_profile();

    let spec = DesignSpec {
        n_arms: 2, stages: 2,
        adding: AddingTimes::Fractions(vec![0.0, 1.0]),
        alpha: 0.025, beta: 0.2,
        theta_clin: th, sigma: 1.0,
        boundary_shape: BoundaryShape::TriangularBinding,
        power_mode: PowerMode::Pairwise,
    };
    let spec43 = DesignSpec {
        n_arms: 4, stages: 3,
        adding: AddingTimes::Fractions(vec![0.0, 0.34, 0.67, 1.0]),
        alpha: 0.05, ..spec.clone()
    };
    let sep43 = design_separate(&DesignSpec { alpha: 0.025, ..spec43.clone() }, AlphaSetting::PerTrial, &EngineSettings::default()).unwrap();
    let scen43 = standard_scenarios(4, th);
    let t0 = std::time::Instant::now();
    let scan43 = crossover_scan(&spec43, &sep43, &[], &scen43, &scan_settings, 512).unwrap();
    eprintln!("K=4 J=3 pw: maxN {:?} (103), E {:?} (59,58,49,55), flags {:?}, {:?}",
        scan43.crossovers.max_n, scan43.crossovers.expected, scan43.crossovers.flags, t0.elapsed());
}
