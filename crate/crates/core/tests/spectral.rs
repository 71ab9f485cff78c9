use std::f64::consts::TAU;

use abspec_core::oracle::{bessel_j, disk_spectrum, DiskMode};
use abspec_core::spectral::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn trace_of(f: impl Fn(f64) -> Complex64, q: usize, theta0: f64) -> CircleTrace {
    let samples = (0..q).map(|k| f(theta0 + TAU * k as f64 / q as f64)).collect();
    CircleTrace { center: [0.0, 0.0], radius: 1.0, theta0, samples }
}

/// Trace with only mode `j`, whose coefficient at radius r is `v(r)`.
fn single_mode_trace(alpha: f64, j: i32, radii: &[f64], v: impl Fn(f64) -> f64) -> FourierTrace {
    let q = 64;
    let modes: Vec<Modes> = radii
        .iter()
        .map(|&r| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); q];
            coeffs[j.rem_euclid(q as i32) as usize] = Complex64::new(v(r), 0.0);
            Modes { coeffs }
        })
        .collect();
    let amplitude = radii.iter().map(|&r| v(r).abs()).fold(0.0, f64::max);
    FourierTrace { alpha, center: [0.0, 0.0], theta0: 0.0, radii: radii.to_vec(), modes, amplitude, parseval_defect: 0.0 }
}

#[test]
fn modes_of_trigonometric_polynomial() {
    let f = |t: f64| Complex64::new(1.0, 0.0) + Complex64::from_polar(2.0, 3.0 * t) - Complex64::from_polar(0.5, -5.0 * t);
    for theta0 in [0.0, 0.7, 2.0] {
        let m = fourier_modes(&trace_of(f, 64, theta0));
        let s = TAU.sqrt();
        assert!((m.get(0) - s).norm() < 1e-13);
        assert!((m.get(3) - 2.0 * s).norm() < 1e-13);
        assert!((m.get(-5) + 0.5 * s).norm() < 1e-13);
        assert!(m.get(1).norm() < 1e-13);
        assert_eq!(m.get(40), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn trace_sampling_rejects_bad_counts() {
    let d = abspec_core::geometry::make_disk_domain(1.0, 32).unwrap();
    let mesh = abspec_core::geometry::mesh_domain(&d, [0.0, 0.0], 0.3, 2.0).unwrap();
    let loc = abspec_core::locate::Locator::new(&mesh);
    let vals = vec![Complex64::new(1.0, 0.0); mesh.n_vertices()];
    let field = abspec_core::fields::Field::new(&mesh, &loc, &vals);
    assert!(trace_circle(&field, [0.0, 0.0], 0.5, 100, 0.0).is_err());
    assert!(trace_circle(&field, [0.0, 0.0], 1.5, 64, 0.0).is_err());
    let t = trace_circle(&field, [0.0, 0.0], 0.5, 64, 0.0).unwrap();
    assert!((t.mean_square_integral() - TAU).abs() < 1e-12);
}

#[test]
fn fmt12_matches_printf_g() {
    let cases = [
        (1.0, "1"),
        (0.1, "0.1"),
        (-2.5, "-2.5"),
        (1.0 / 3.0, "0.333333333333"),
        (1e-7, "1e-07"),
        (123456789012345.0, "1.23456789012e+14"),
        (8.145870966194694, "8.14587096619"),
        (0.0, "0"),
        (100.0, "100"),
        (2.5e-5, "2.5e-05"),
    ];
    for (x, want) in cases {
        assert_eq!(fmt12(x), want, "{x}");
    }
}

#[test]
fn beta_grid_contains_anchors() {
    let g = beta_grid(0.01, 0.0025, &[0.2, 0.3, 0.4, 0.5]);
    assert_eq!(g[0], 0.01);
    assert_eq!(*g.last().unwrap(), 0.5);
    for r in [0.2, 0.3, 0.4] {
        assert!(g.contains(&r));
    }
    assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.0025 + 1e-15));
}

#[test]
fn loglog_slope_of_power_law() {
    let x: Vec<f64> = (1..10).map(|k| 0.01 * k as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
    let (s, r2) = loglog_slope(&x, &y);
    assert!((s - 0.7).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
}

#[test]
fn beta_of_exact_bessel_modes() {
    // The radial coefficient of a disk eigenfunction is sqrt(2pi) c J_nu(z r).
    let r_grid = [0.2, 0.3, 0.4, 0.5];
    let radii = beta_grid(0.01, 0.0025, &r_grid);
    for alpha in [0.3, 0.7] {
        for e in disk_spectrum(alpha, 3).unwrap().entries {
            let m = DiskMode::new(e).unwrap();
            let ft = single_mode_trace(alpha, e.j, &radii, |r| TAU.sqrt() * m.c * bessel_j(e.nu, e.zero * r).unwrap());
            let b = beta_coefficient(&ft, e.j, e.lambda, &r_grid).unwrap();
            assert!((b.beta.re - m.beta()).abs() < 1e-4 * m.beta(), "{e:?}: {} vs {}", b.beta, m.beta());
            assert!(b.spread < 1e-4);
            assert!(!b.negligible);
        }
    }
}

#[test]
fn beta_rejects_radius_off_grid() {
    let radii = beta_grid(0.01, 0.0025, &[0.2]);
    let ft = single_mode_trace(0.3, 0, &radii, |r| r.powf(0.3));
    assert!(beta_estimate(&ft, 0, 1.0, &[0.21]).is_err());
}

#[test]
fn r_dependent_coefficient_is_rejected() {
    // A harmonic-free profile r^nu (1 + 5 r) is not an eigenfunction trace.
    let r_grid = [0.2, 0.3, 0.4];
    let radii = beta_grid(0.01, 0.0025, &r_grid);
    let ft = single_mode_trace(0.3, 0, &radii, |r| r.powf(0.3) * (1.0 + 5.0 * r));
    assert!(beta_estimate(&ft, 0, 0.0, &r_grid).unwrap().spread > 0.1);
    assert!(matches!(beta_coefficient(&ft, 0, 0.0, &r_grid), Err(abspec_core::Error::RDependence { mode: 0, .. })));
}

#[test]
fn vanishing_order_picks_smallest_order() {
    let r_grid = [0.2, 0.3, 0.4];
    let radii = beta_grid(0.01, 0.0025, &r_grid);
    let q = 64;
    let modes: Vec<Modes> = radii
        .iter()
        .map(|&r| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); q];
            coeffs[1] = Complex64::new(2.0 * r.powf(0.7), 0.0);
            coeffs[q - 1] = Complex64::new(r.powf(1.3), 0.0);
            Modes { coeffs }
        })
        .collect();
    let ft = FourierTrace { alpha: 0.3, center: [0.0, 0.0], theta0: 0.0, radii, modes, amplitude: 2.0, parseval_defect: 0.0 };
    let betas = beta_table(&ft, 2, 0.0, &r_grid).unwrap();
    let vo = vanishing_order(&ft, &betas, 1e-3).unwrap();
    assert_eq!(vo.k, 1);
    assert!((vo.order - 0.7).abs() < 1e-15);
    assert!((vo.beta_k.re - 2.0).abs() < 1e-9);
    assert!(vo.slope_consistent);
    let rem = truncation_remainder(&ft, &[1]);
    assert!((rem[0] - 0.01f64.powf(1.3)).abs() < 1e-15);
    let u = reconstruct_expansion(&ft, 0.2, 0.5, 3);
    let want = (Complex64::from_polar(2.0 * 0.2f64.powf(0.7), 0.5) + Complex64::from_polar(0.2f64.powf(1.3), -0.5)) / TAU.sqrt();
    assert!((u - want).norm() < 1e-14);
}

proptest! {
    #[test]
    fn parseval_holds_for_samples(re in prop::collection::vec(-1.0f64..1.0, 64), im in prop::collection::vec(-1.0f64..1.0, 64), theta0 in 0.0f64..TAU) {
        let samples: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let t = CircleTrace { center: [0.0, 0.0], radius: 1.0, theta0, samples };
        let m = fourier_modes(&t);
        let direct = t.mean_square_integral();
        prop_assert!((m.norm_sqr_sum() - direct).abs() < 1e-12 * direct.max(1.0));
    }
}
