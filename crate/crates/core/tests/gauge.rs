use std::f64::consts::{PI, TAU};

use abspec_core::gauge::*;
use abspec_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// (i grad + A) u by central differences.
fn covariant_fd(cfg: &PoleConfig, u: &dyn Fn([f64; 2]) -> Complex64, x: [f64; 2]) -> [Complex64; 2] {
    let h = 1e-6;
    let dx = (u([x[0] + h, x[1]]) - u([x[0] - h, x[1]])) / (2.0 * h);
    let dy = (u([x[0], x[1] + h]) - u([x[0], x[1] - h])) / (2.0 * h);
    let a = cfg.potential(x);
    [I * dx + u(x) * a[0], I * dy + u(x) * a[1]]
}

#[test]
fn alpha_validation() {
    assert!(PoleConfig::new(0.5, [0.0, 0.0]).is_err());
    assert!(PoleConfig::new(0.0, [0.0, 0.0]).is_err());
    assert!(PoleConfig::new(1.0, [0.0, 0.0]).is_err());
    assert!(PoleConfig::new(0.3, [f64::NAN, 0.0]).is_err());
    assert!(check_alpha(0.7).is_ok());
}

#[test]
fn potential_is_circulation_over_radius() {
    let cfg = PoleConfig::new(0.3, [0.2, -0.1]).unwrap();
    let a = cfg.vector_potential([0.7, -0.1]).unwrap();
    assert!((a[0]).abs() < 1e-15 && (a[1] - 0.3 / 0.5).abs() < 1e-14);
    assert!(cfg.vector_potential([0.2, -0.1]).is_err());
    assert!(cfg.theta_pole([0.2, -0.1]).is_err());
}

#[test]
fn angles_live_in_shifted_branch() {
    let cfg = PoleConfig::new(0.3, [0.0, 0.1]).unwrap();
    assert!((cfg.direction_angle - PI / 2.0).abs() < 1e-15);
    let t = cfg.theta_origin_cut([1.0, 0.0]).unwrap();
    assert!((t - TAU).abs() < 1e-14);
    let t = cfg.theta_origin_cut([0.0, 2.0]).unwrap();
    assert!((t - PI / 2.0).abs() < 1e-14);
    let t = cfg.theta_pole([0.0, -1.0]).unwrap();
    assert!((t - 3.0 * PI / 2.0).abs() < 1e-14);
}

#[test]
fn centered_phase_is_one() {
    let cfg = PoleConfig::new(0.3, [0.0, 0.0]).unwrap();
    assert!(cfg.is_centered());
    for x in [[0.3, 0.2], [-0.5, 0.0], [0.0, -0.1]] {
        assert_eq!(cfg.gauge_phase(x).unwrap(), Complex64::new(1.0, 0.0));
    }
}

#[test]
fn phase_jumps_only_across_segment() {
    let alpha = 0.3;
    let p = [0.08, 0.06];
    let cfg = PoleConfig::new(alpha, p).unwrap();
    let mid = [0.5 * p[0], 0.5 * p[1]];
    assert!(cfg.on_cut(mid));
    assert!(matches!(cfg.gauge_phase(mid), Err(Error::OnCut(_))));
    let ratio = cfg.phase_on_side(mid, 1.0) / cfg.phase_on_side(mid, -1.0);
    let jump = Complex64::from_polar(1.0, TAU * alpha);
    assert!((ratio - jump).norm() < 1e-7 || (ratio - jump.conj()).norm() < 1e-7, "ratio {ratio}");
    // Beyond the pole and behind the origin the phase is continuous.
    let n = [-p[1] / 0.1, p[0] / 0.1];
    for s in [2.5, -1.5] {
        let x = [s * p[0], s * p[1]];
        let e = 1e-9;
        let up = cfg.phase_unchecked([x[0] + e * n[0], x[1] + e * n[1]]);
        let down = cfg.phase_unchecked([x[0] - e * n[0], x[1] - e * n[1]]);
        assert!((up - down).norm() < 1e-7, "s {s}");
    }
}

#[test]
fn phase_converts_between_gauges() {
    // conj(phase) maps functions in the centered gauge to the gauge at a.
    for &(alpha, p) in &[(0.3, [0.1, 0.05]), (0.7, [-0.2, 0.1]), (0.3, [0.0, 0.0])] {
        let cfg = PoleConfig::new(alpha, p).unwrap();
        for k in [0, 1, -1, 2] {
            let u = |x: [f64; 2]| cfg.phase_unchecked(x).conj() * psi_profile(alpha, k, x);
            for x in [[-0.4, 0.5], [0.6, -0.3], [-0.2, -0.7]] {
                let fd = covariant_fd(&cfg, &u, x);
                let g = psi_covariant_gradient(alpha, k, x);
                let ph = cfg.phase_unchecked(x).conj();
                for c in 0..2 {
                    let want = ph * g[c];
                    assert!((fd[c] - want).norm() < 1e-6 * (1.0 + want.norm()), "alpha {alpha} k {k} x {x:?}");
                }
            }
        }
    }
}

#[test]
fn profiles_are_homogeneous() {
    assert_eq!(psi_profile(0.3, 0, [0.0, 0.0]), Complex64::new(0.0, 0.0));
    assert!((order(0.3, 1) - 0.7).abs() < 1e-15);
    assert!((order(0.3, -2) - 2.3).abs() < 1e-15);
}

proptest! {
    #[test]
    fn profile_scaling(r in 0.01f64..5.0, t in 0.0f64..TAU, s in 0.1f64..10.0, k in -3i32..4) {
        let x = [r * t.cos(), r * t.sin()];
        let y = [s * x[0], s * x[1]];
        let nu = order(0.3, k);
        let lhs = psi_profile(0.3, k, y);
        let rhs = psi_profile(0.3, k, x) * s.powf(nu);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        prop_assert!((psi_profile(0.3, k, x).norm() - r.powf(nu) / TAU.sqrt()).abs() < 1e-12 * (1.0 + r.powf(nu)));
    }

    #[test]
    fn phase_is_unimodular(x in -1.0f64..1.0, y in -1.0f64..1.0, px in -0.3f64..0.3, py in -0.3f64..0.3) {
        let cfg = PoleConfig::new(0.3, [px, py]).unwrap();
        prop_assert!((cfg.phase_unchecked([x, y]).norm() - 1.0).abs() < 1e-14);
        let t = cfg.theta_origin_cut([x, y]);
        if let Ok(t) = t {
            prop_assert!(t >= cfg.direction_angle && t < cfg.direction_angle + TAU);
        }
    }
}
