use plattrial::*;
use std::time::Instant;

fn main() {
    let th = -(0.69f64.ln());
    let counts = vec![0u64, 60, 120, 180];
    let sched = schedule_from_counts(4, 3, 53, &counts).unwrap();
    let b = plattrial::boundary::shape(BoundaryShape::TriangularBinding, 4, 3, 2.32);
    for theta in [vec![th; 4], vec![th, 0.0, 0.0, 0.0], vec![0.0; 4]] {
        for tgt in [3e-5, 1e-5] {
            let s = MvnSettings::default().with_target(tgt);
            let t0 = Instant::now();
            let e = plattrial::oc::expected_sample_size(&sched, &b, &ScenarioTheta::new(theta.clone()).unwrap(), &s).unwrap();
            eprintln!("theta {:?} tgt {tgt:.0e}: E={:.2} err {:.1e} in {:?}", &theta[..2], e.expected_total, e.error, t0.elapsed());
        }
    }
}
