use std::f64::consts::FRAC_PI_2;

use abspec_core::asymptotics::*;
use abspec_core::geometry::{default_grading, make_disk_domain, MeshParams};
use abspec_core::Execution;

fn sweep(angle: f64, exec: Execution) -> SweepReport {
    let d = make_disk_domain(1.0, 128).unwrap();
    let params = MeshParams::new(d, 0.1, default_grading(0.3));
    let mut cfg = SweepConfig::new(0.3, angle, vec![0.1, 0.07, 0.05, 0.025]);
    cfg.exec = exec;
    cfg.solver.exec = exec;
    pole_sweep(&params, &cfg, None).unwrap()
}

#[test]
fn coarse_sweep_is_symmetric_and_deterministic() {
    let a = sweep(0.0, Execution::Parallel);
    assert_eq!(a.k, 0);
    assert!((a.order - 0.3).abs() < 1e-15);
    let fit = a.fit.as_ref().unwrap();
    assert!(fit.slope > 1.6 - 0.2, "slope {}", fit.slope);
    for s in &a.samples {
        assert!(s.diff > 0.0, "eigenvalue should drop as the pole moves");
        assert!(s.solution.frequency.h_positive());
        assert!(s.solution.parseval_defect < 1e-8);
        assert!(s.blowup.is_none());
    }

    let b = sweep(FRAC_PI_2, Execution::Parallel);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.lambda - y.lambda).abs() < 5e-4 * x.lambda, "{} vs {}", x.lambda, y.lambda);
    }

    let c = sweep(0.0, Execution::Sequential);
    for (x, y) in a.samples.iter().zip(&c.samples) {
        assert_eq!(x.lambda, y.lambda);
        assert_eq!(x.gap, y.gap);
    }
    let (mut ca, mut cc) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    c.write_csv(&mut cc).unwrap();
    assert_eq!(ca, cc);
}
