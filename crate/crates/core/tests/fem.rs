use std::sync::OnceLock;

use abspec_core::almgren::{dh_identity_check, frequency_curve, inequality_check};
use abspec_core::assembly::{assemble, assemble_all, AssembledSystem};
use abspec_core::eigensolve::{check_simplicity, solve_lowest, write_eigenpair, SolverOptions, SpectrumSlice};
use abspec_core::fields::Field;
use abspec_core::gauge::PoleConfig;
use abspec_core::geometry::{default_grading, make_disk_domain, mesh_domain, triangle_area, Mesh};
use abspec_core::locate::Locator;
use abspec_core::oracle::disk_spectrum;
use abspec_core::sparse::Csr;
use abspec_core::spectral::{beta_coefficient, beta_grid, FourierTrace, TraceOptions};
use abspec_core::Execution;
use num_complex::Complex64;

/// Open chain with hopping phase `phi`; spectrum 2 - 2 cos(k pi / (n + 1)).
fn chain(n: usize, phi: f64) -> AssembledSystem {
    let mut pairs = Vec::new();
    for i in 0..n {
        if i > 0 {
            pairs.push((i, i - 1));
        }
        pairs.push((i, i));
        if i + 1 < n {
            pairs.push((i, i + 1));
        }
    }
    let mut k: Csr<Complex64> = Csr::from_pattern(n, &pairs);
    let mut m: Csr<f64> = Csr::from_pattern(n, &pairs);
    for i in 0..n {
        let d = k.position(i, i).unwrap();
        k.vals[d] = Complex64::new(2.0, 0.0);
        let dm = m.position(i, i).unwrap();
        m.vals[dm] = 1.0;
        if i + 1 < n {
            let p = k.position(i, i + 1).unwrap();
            k.vals[p] = -Complex64::from_polar(1.0, phi);
            let q = k.position(i + 1, i).unwrap();
            k.vals[q] = -Complex64::from_polar(1.0, -phi);
        }
    }
    AssembledSystem::from_matrices(k, m).unwrap()
}

fn chain_eigenvalue(n: usize, k: usize) -> f64 {
    2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()
}

#[test]
fn dense_and_iterative_paths_match_chain_spectrum() {
    for n in [120, 400] {
        let sys = chain(n, 0.4);
        let slice = solve_lowest(&sys, 4, &SolverOptions::default()).unwrap();
        for (k, p) in slice.pairs.iter().enumerate() {
            let want = chain_eigenvalue(n, k + 1);
            assert!((p.lambda - want).abs() < 1e-8 * want, "n {n} k {k}: {} vs {want}", p.lambda);
            assert!(p.residual < 1e-8, "n {n} residual {}", p.residual);
            assert!((sys.mass.quad_form(&p.vector).re - 1.0).abs() < 1e-12);
            let vmax = p.vector.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(p.vector.iter().any(|z| z.norm() > vmax * (1.0 - 1e-9) && z.im.abs() < 1e-12 && z.re > 0.0));
        }
        assert!(slice.simple);
    }
}

#[test]
fn solver_rejects_oversized_requests() {
    assert!(solve_lowest(&chain(20, 0.0), 21, &SolverOptions::default()).is_err());
    assert!(solve_lowest(&chain(400, 0.0), 101, &SolverOptions::default()).is_err());
    assert!(solve_lowest(&chain(20, 0.0), 0, &SolverOptions::default()).is_err());
}

#[test]
fn simplicity_uses_relative_gap() {
    let slice = SpectrumSlice {
        pairs: [1.0, 2.0, 2.001, 3.0]
            .iter()
            .map(|&l| abspec_core::eigensolve::EigenPair {
                lambda: l,
                vector: vec![],
                nodal: vec![],
                l2_norm: 1.0,
                residual: 0.0,
                phase_aligned_against: None,
            })
            .collect(),
        target: 1,
        gap_below_target: 0.0,
        gap_above_target: 0.0,
        simple: true,
    };
    assert!(check_simplicity(&slice, 1, 1e-3));
    assert!(!check_simplicity(&slice, 2, 1e-3));
    assert!(check_simplicity(&slice, 2, 1e-4));
    assert!(!check_simplicity(&slice, 5, 1e-3));
}

struct Disk {
    mesh: Mesh,
    locator: Locator,
    cfg: PoleConfig,
    sys: AssembledSystem,
    slice: SpectrumSlice,
}

fn disk() -> &'static Disk {
    static D: OnceLock<Disk> = OnceLock::new();
    D.get_or_init(|| {
        let d = make_disk_domain(1.0, 128).unwrap();
        let mesh = mesh_domain(&d, [0.0, 0.0], 0.1, default_grading(0.3)).unwrap();
        let cfg = PoleConfig::new(0.3, [0.0, 0.0]).unwrap();
        let sys = assemble(&mesh, &cfg, 4, Execution::Parallel).unwrap();
        let slice = solve_lowest(&sys, 3, &SolverOptions::default()).unwrap();
        let locator = Locator::new(&mesh);
        Disk { mesh, locator, cfg, sys, slice }
    })
}

#[test]
fn mass_integrates_to_area() {
    let d = disk();
    let (k, m) = assemble_all(&d.mesh, &d.cfg, 4, Execution::Sequential).unwrap();
    let area: f64 = (0..d.mesh.triangles.len()).map(|t| triangle_area(d.mesh.tri_points(t))).sum();
    let total: f64 = m.vals.iter().sum();
    assert!((total - area).abs() < 1e-12 * area);
    assert!(k.hermitian_defect() < 1e-12);
    assert_eq!(k.n, d.mesh.n_vertices());
}

#[test]
fn matrices_are_hermitian_and_restricted() {
    let d = disk();
    assert!(d.sys.stiffness.hermitian_defect() < 1e-12);
    assert_eq!(d.sys.dim(), d.mesh.n_vertices() - d.mesh.boundary_vertices.len() - 1);
    let pair = &d.slice.pairs[0];
    assert_eq!(pair.nodal[d.mesh.pole_vertex], Complex64::new(0.0, 0.0));
    let rq = d.sys.stiffness.quad_form(&pair.vector).re / d.sys.mass.quad_form(&pair.vector).re;
    assert!((rq - pair.lambda).abs() < 1e-7 * pair.lambda);
}

#[test]
fn sequential_and_parallel_assembly_agree() {
    let d = disk();
    let seq = assemble(&d.mesh, &d.cfg, 4, Execution::Sequential).unwrap();
    assert_eq!(seq.stiffness, d.sys.stiffness);
    assert_eq!(seq.mass, d.sys.mass);
}

#[test]
fn coarse_disk_matches_bessel_spectrum() {
    let d = disk();
    let exact = disk_spectrum(0.3, 3).unwrap();
    for (p, e) in d.slice.pairs.iter().zip(&exact.entries) {
        let rel = (p.lambda - e.lambda) / e.lambda;
        assert!(rel > 0.0 && rel < 0.01, "lambda {} vs {}", p.lambda, e.lambda);
    }
}

#[test]
fn coarse_disk_beta_and_frequency() {
    let d = disk();
    let pair = &d.slice.pairs[0];
    let field = Field::new(&d.mesh, &d.locator, &pair.nodal);
    let r_grid = [0.2, 0.3, 0.4, 0.5];
    let radii = beta_grid(0.01, 0.0025, &r_grid);
    let ft = FourierTrace::new(&field, 0.3, [0.0, 0.0], 0.0, &radii, TraceOptions::default()).unwrap();
    assert!(ft.parseval_defect < 1e-10);
    let b = beta_coefficient(&ft, 0, pair.lambda, &r_grid).unwrap();
    assert!(b.spread < 0.05);
    assert!((b.beta.norm() - 3.6963097603157426).abs() < 0.01 * 3.7, "beta {}", b.beta);

    let frad: Vec<f64> = (0..=8).map(|k| 0.1 + 0.05 * k as f64).collect();
    let curve = frequency_curve(&field, pair.lambda, &d.cfg, &frad, Execution::Parallel).unwrap();
    assert!(curve.h_positive());
    assert!(dh_identity_check(&curve).unwrap() < 0.02);
    let near = frequency_curve(&field, pair.lambda, &d.cfg, &[0.05], Execution::Parallel).unwrap();
    assert!((near.n[0] - 0.3).abs() < 0.05, "N(0.05) = {}", near.n[0]);

    let ineq = inequality_check(&field, &d.cfg, 0.25, 0.5, Execution::Parallel).unwrap();
    assert!(ineq.holds(0.0), "{ineq:?}");
}

#[test]
fn eigenpair_dump_format() {
    let d = disk();
    let mut buf = Vec::new();
    write_eigenpair(&d.slice.pairs[0], &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("# lambda "));
    assert_eq!(lines.count(), d.mesh.n_vertices());
    let mut dump = Vec::new();
    d.sys.dump_stiffness(&mut dump).unwrap();
    assert_eq!(String::from_utf8(dump).unwrap().lines().count(), d.sys.stiffness.nnz());
}
