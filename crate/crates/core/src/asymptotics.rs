//! Pole sweeps: eigenvalue-variation rates, blow-up profiles and the
//! gradient-level convergence constant.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use crate::almgren::{self, AlmgrenCurve, InequalityReport, PoleTerm};
use crate::assembly::{assemble, assemble_all};
use crate::eigensolve::{align_phase, solve_lowest, EigenPair, SolverOptions};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::gauge::{psi_covariant_gradient, psi_profile, PoleConfig};
use crate::geometry::{make_disk_domain, mesh_domain_with, remesh_for_pole, Domain, Mesh, MeshParams, Point};
use crate::linalg::Factor;
use crate::locate::Locator;
use crate::overlay::{self, Region};
use crate::par::{map_slice, Execution};
use crate::quad::gauss_legendre;
use crate::sparse::Csr;
use crate::spectral::{self, fmt12, BetaEstimate, FourierTrace, TraceOptions, VanishingOrder};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub alpha: f64,
    /// Angle of the direction p.
    pub direction_angle: f64,
    /// Decreasing list of |a|.
    pub radii: Vec<f64>,
    /// Index of the tracked eigenvalue (1-based).
    pub n0: usize,
    /// K in H(phi_a, K|a|).
    pub k_scale: f64,
    pub solver: SolverOptions,
    /// Relative gap required for simplicity.
    pub rel_gap: f64,
    pub quadrature_order: usize,
    /// Radii R for the beta integral formula.
    pub beta_radii: Vec<f64>,
    pub beta_s_min: f64,
    pub beta_ds: f64,
    pub jmax: i32,
    /// Outer radius of the frequency window [4|a|, r].
    pub frequency_r_max: f64,
    pub hardy_radius: f64,
    pub poincare_radius: f64,
    pub annulus: (f64, f64),
    pub exec: Execution,
}

impl SweepConfig {
    pub fn new(alpha: f64, direction_angle: f64, radii: Vec<f64>) -> SweepConfig {
        SweepConfig {
            alpha,
            direction_angle,
            radii,
            n0: 1,
            k_scale: 4.0,
            solver: SolverOptions::default(),
            rel_gap: 1e-3,
            quadrature_order: 4,
            beta_radii: vec![0.2, 0.3, 0.4],
            beta_s_min: 0.01,
            beta_ds: 0.0025,
            jmax: 3,
            frequency_r_max: 0.3,
            hardy_radius: 0.25,
            poincare_radius: 0.5,
            annulus: (1.5, 3.0),
            exec: Execution::Parallel,
        }
    }

    pub fn direction(&self) -> Point {
        [self.direction_angle.cos(), self.direction_angle.sin()]
    }

    /// Noise floor for eigenvalue differences.
    pub fn noise_floor(&self, lambda0: f64) -> f64 {
        10.0 * self.solver.tol * lambda0
    }
}

/// Solution data at one pole position.
#[derive(Debug, Clone)]
pub struct PoleSolution {
    pub pole: Point,
    pub mesh: Mesh,
    pub locator: Locator,
    pub pair: EigenPair,
    pub lambdas: Vec<f64>,
    pub betas: Vec<BetaEstimate>,
    pub order: VanishingOrder,
    pub parseval_defect: f64,
    pub frequency: AlmgrenCurve,
    pub inequality: InequalityReport,
    pub perturbed_monotone: bool,
}

impl PoleSolution {
    pub fn field(&self) -> Field<'_> {
        Field::new(&self.mesh, &self.locator, &self.pair.nodal)
    }

    pub fn beta(&self, j: i32) -> Complex64 {
        self.betas.iter().find(|b| b.j == j).map(|b| b.beta).unwrap_or_default()
    }
}

#[derive(Debug, Clone)]
pub struct SweepSample {
    pub abs_a: f64,
    pub solution: PoleSolution,
    pub lambda: f64,
    /// lambda_0 - lambda_a, signed.
    pub diff: f64,
    /// H(phi_a, K|a|).
    pub h_k: f64,
    pub pole_term: PoleTerm,
    /// |a|^order / sqrt(H(phi_a, K|a|)).
    pub h_ratio: f64,
    /// Relative distance of the rescaled reference to the best multiple of psi_k on D_2 \ D_1.
    pub reference_blowup: f64,
    pub blowup: Option<BlowUp>,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub alpha: f64,
    pub direction: Point,
    pub k_scale: f64,
    pub n0: usize,
    pub reference: PoleSolution,
    /// Sorted by decreasing |a|.
    pub samples: Vec<SweepSample>,
    pub order: f64,
    pub k: i32,
    pub noise_floor: f64,
    pub fit: Option<RateFit>,
    pub quotient_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub r2: f64,
    /// |a| values excluded as below the noise floor.
    pub dropped: Vec<f64>,
}

fn with_abs_a<T>(abs_a: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Sample { abs_a, source: Box::new(e) })
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn frequency_radii(abs_a: f64, r_max: f64) -> Vec<f64> {
    let lo = if abs_a > 0.0 { 4.0 * abs_a } else { 0.05 };
    if lo >= r_max {
        vec![lo, lo * 1.1]
    } else {
        geometric(lo, r_max, 12)
    }
}

/// Lowest eigenpairs at pole `pole`; returns the tracked pair and the computed eigenvalues.
fn solve_raw(mesh: &Mesh, pole: Point, cfg: &SweepConfig) -> Result<(EigenPair, Vec<f64>)> {
    let pc = PoleConfig::new(cfg.alpha, pole)?;
    let sys = assemble(mesh, &pc, cfg.quadrature_order, cfg.exec)?;
    let m = cfg.n0 + 1;
    let mut slice = solve_lowest(&sys, m, &SolverOptions { exec: cfg.exec, ..cfg.solver })?;
    slice.set_target(cfg.n0, cfg.rel_gap);
    if !slice.simple {
        let lam = slice.pairs[cfg.n0 - 1].lambda;
        return Err(Error::NotSimple {
            index: cfg.n0,
            gap: slice.gap_below_target.min(slice.gap_above_target) / lam,
        });
    }
    let lambdas = slice.lambdas();
    Ok((slice.pairs.swap_remove(cfg.n0 - 1), lambdas))
}

fn analyze(
    mesh: Mesh,
    locator: Locator,
    pair: EigenPair,
    lambdas: Vec<f64>,
    pc: &PoleConfig,
    cfg: &SweepConfig,
) -> Result<PoleSolution> {
    let pole = pc.pole;
    let field = Field::new(&mesh, &locator, &pair.nodal);
    let grid = spectral::beta_grid(cfg.beta_s_min, cfg.beta_ds, &cfg.beta_radii);
    let ft = FourierTrace::new(&field, cfg.alpha, pole, pc.direction_angle, &grid, TraceOptions { exec: cfg.exec, ..Default::default() })?;
    let betas: Vec<BetaEstimate> = (-cfg.jmax..=cfg.jmax)
        .map(|j| spectral::beta_estimate(&ft, j, pair.lambda, &cfg.beta_radii))
        .collect::<Result<_>>()?;
    let order = spectral::vanishing_order(&ft, &betas, 0.05)?;
    if let Some(b) = betas.iter().find(|b| b.j == order.k && b.spread > 0.1) {
        return Err(Error::RDependence { mode: b.j, spread: b.spread });
    }
    let abs_a = crate::geometry::norm(pole);
    let frequency = almgren::frequency_curve(&field, pair.lambda, pc, &frequency_radii(abs_a, cfg.frequency_r_max), cfg.exec)?;
    let inequality = almgren::inequality_check(&field, pc, cfg.hardy_radius, cfg.poincare_radius, cfg.exec)?;
    let perturbed_monotone = if pair.lambda * cfg.frequency_r_max.powi(2) < 1.0 {
        almgren::approximately_monotone(&almgren::perturbed_frequency(&frequency, pair.lambda, cfg.frequency_r_max), 0.05)
    } else {
        true
    };
    Ok(PoleSolution {
        pole,
        parseval_defect: ft.parseval_defect,
        mesh,
        locator,
        pair,
        lambdas,
        betas,
        order,
        frequency,
        inequality,
        perturbed_monotone,
    })
}

/// Solve at a = 0 on a mesh built from `params`.
pub fn reference_solution(params: &MeshParams, cfg: &SweepConfig) -> Result<PoleSolution> {
    let mesh = mesh_domain_with(params, [0.0, 0.0])?;
    let (pair, lambdas) = solve_raw(&mesh, [0.0, 0.0], cfg)?;
    let locator = Locator::new(&mesh);
    analyze(mesh, locator, pair, lambdas, &PoleConfig::new(cfg.alpha, [0.0, 0.0])?, cfg)
}

fn sweep_sample(
    reference: &PoleSolution,
    abs_a: f64,
    cfg: &SweepConfig,
    profile: Option<&LimitProfile>,
) -> Result<SweepSample> {
    let p = cfg.direction();
    let pole = [abs_a * p[0], abs_a * p[1]];
    let mesh = remesh_for_pole(&reference.mesh, pole)?;
    let pc = PoleConfig::new(cfg.alpha, pole)?;
    let (pair, lambdas) = solve_raw(&mesh, pole, cfg)?;
    let locator = Locator::new(&mesh);
    let pair = align_phase(&pair, &mesh, &locator, &reference.pair, &reference.mesh, &reference.locator, &pc, cfg.exec)?;
    let sol = analyze(mesh, locator, pair, lambdas, &pc, cfg)?;
    let field = sol.field();
    let nu = reference.order.order;
    let k = reference.order.k;
    let lambda = sol.pair.lambda;
    let h_k = almgren::frequency_curve(&field, lambda, &pc, &[cfg.k_scale * abs_a], cfg.exec)?.h[0];
    let pole_term = almgren::pole_term(sol.beta(0), sol.beta(1), pole, cfg.alpha);
    let reference_blowup = rescaled_reference_distance(&reference.field(), abs_a, cfg.alpha, k)?;
    let blowup = match profile {
        Some(pr) => Some(blowup_distance(&field, abs_a, cfg.direction_angle, nu, pr, cfg.annulus)?),
        None => None,
    };
    let gap = eigenfunction_gap(&field, &reference.field(), &pc, nu, cfg.exec);
    Ok(SweepSample {
        abs_a,
        lambda,
        diff: reference.pair.lambda - lambda,
        h_k,
        pole_term,
        h_ratio: abs_a.powf(nu) / h_k.sqrt(),
        reference_blowup,
        blowup,
        gap,
        solution: sol,
    })
}

/// Run the sweep. `profile`, when given, must be the limit profile for the
/// reference's dominant mode.
pub fn pole_sweep(params: &MeshParams, cfg: &SweepConfig, profile: Option<&LimitProfile>) -> Result<SweepReport> {
    if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| w[1] >= w[0]) || cfg.radii[cfg.radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidInput("radii must be positive and strictly decreasing".into()));
    }
    let reference = with_abs_a(0.0, reference_solution(params, cfg))?;
    pole_sweep_with_reference(reference, cfg, profile)
}

/// Run the sweep around an already computed a = 0 solution.
pub fn pole_sweep_with_reference(reference: PoleSolution, cfg: &SweepConfig, profile: Option<&LimitProfile>) -> Result<SweepReport> {
    if cfg.radii.is_empty() || cfg.radii.windows(2).any(|w| w[1] >= w[0]) || cfg.radii[cfg.radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidInput("radii must be positive and strictly decreasing".into()));
    }
    if let Some(pr) = profile {
        if pr.k != reference.order.k || (pr.alpha - cfg.alpha).abs() > 1e-15 {
            return Err(Error::InvalidInput(format!(
                "profile (alpha {}, k {}) does not match the reference (alpha {}, k {})",
                pr.alpha, pr.k, cfg.alpha, reference.order.k
            )));
        }
    }
    let results = map_slice(cfg.exec, &cfg.radii, |&abs_a| with_abs_a(abs_a, sweep_sample(&reference, abs_a, cfg, profile)));
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let noise_floor = cfg.noise_floor(reference.pair.lambda);
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.abs_a, s.diff.abs())).collect();
    let fit = fit_rate(&pts, noise_floor).ok();
    let order = reference.order.order;
    let quotient_spread = quotient_boundedness(&pts, order, noise_floor).ok();
    Ok(SweepReport {
        alpha: cfg.alpha,
        direction: cfg.direction(),
        k_scale: cfg.k_scale,
        n0: cfg.n0,
        order,
        k: reference.order.k,
        reference,
        samples,
        noise_floor,
        fit,
        quotient_spread,
    })
}

fn usable(samples: &[(f64, f64)], floor: f64) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
    let (keep, drop): (Vec<(f64, f64)>, Vec<(f64, f64)>) = samples.iter().partition(|(_, d)| *d > floor);
    let dropped = drop.iter().map(|s| s.0).collect();
    if keep.len() < 4 {
        return Err(Error::InsufficientSamples(keep.len()));
    }
    let lo = keep.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = keep.iter().map(|s| s.0).fold(0.0, f64::max);
    if hi < 4.0 * lo * (1.0 - 1e-9) {
        return Err(Error::InvalidInput(format!("samples span only a factor {:.3} in |a|", hi / lo)));
    }
    Ok((keep, dropped))
}

/// Least-squares slope of log|diff| against log|a|.
pub fn fit_rate(samples: &[(f64, f64)], noise_floor: f64) -> Result<RateFit> {
    let (keep, dropped) = usable(samples, noise_floor)?;
    let x: Vec<f64> = keep.iter().map(|s| s.0).collect();
    let y: Vec<f64> = keep.iter().map(|s| s.1).collect();
    let (slope, r2) = spectral::loglog_slope(&x, &y);
    Ok(RateFit { slope, r2, dropped })
}

/// max q / min q for q = |diff| / |a|^{2 order}.
pub fn quotient_boundedness(samples: &[(f64, f64)], order: f64, noise_floor: f64) -> Result<f64> {
    let (keep, _) = usable(samples, noise_floor)?;
    let q: Vec<f64> = keep.iter().map(|(a, d)| d / a.powf(2.0 * order)).collect();
    let hi = q.iter().copied().fold(0.0, f64::max);
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi / lo)
}

/// x -> u(|a| x) / |a|^order.
pub struct BlowUpField<'a> {
    pub field: Field<'a>,
    pub abs_a: f64,
    pub order: f64,
}

pub fn blow_up_field<'a>(field: Field<'a>, abs_a: f64, order: f64) -> Result<BlowUpField<'a>> {
    if !(abs_a > 0.0) {
        return Err(Error::InvalidInput("blow-up needs |a| > 0".into()));
    }
    Ok(BlowUpField { field, abs_a, order })
}

impl BlowUpField<'_> {
    pub fn eval(&self, x: Point) -> Result<Complex64> {
        let y = [self.abs_a * x[0], self.abs_a * x[1]];
        let v = self.field.eval(y).ok_or(Error::OutsideMesh(y))?;
        Ok(v / self.abs_a.powf(self.order))
    }
}

/// Quadrature points and weights on the annulus r1 < |x| < r2.
pub fn annulus_grid(r1: f64, r2: f64, nr: usize, nt: usize) -> Vec<(Point, f64)> {
    let (gx, gw) = gauss_legendre(nr);
    let mut out = Vec::with_capacity(nr * nt);
    for (x, w) in gx.iter().zip(&gw) {
        let r = r1 + (r2 - r1) * x;
        let wr = w * (r2 - r1) * r * TAU / nt as f64;
        for j in 0..nt {
            let t = TAU * (j as f64 + 0.5) / nt as f64;
            out.push(([r * t.cos(), r * t.sin()], wr));
        }
    }
    out
}

/// min_c ||u - c v|| / ||c v|| over a weighted point set, with the minimizer.
pub fn best_multiple(u: &[Complex64], v: &[Complex64], w: &[f64]) -> (f64, Complex64) {
    let mut uv = Complex64::new(0.0, 0.0);
    let mut vv = 0.0;
    for ((a, b), w) in u.iter().zip(v).zip(w) {
        uv += b.conj() * a * w;
        vv += b.norm_sqr() * w;
    }
    let c = uv / vv;
    let mut err = 0.0;
    for ((a, b), w) in u.iter().zip(v).zip(w) {
        err += (a - c * b).norm_sqr() * w;
    }
    ((err / (c.norm_sqr() * vv)).sqrt(), c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    pub distance: f64,
    pub c: Complex64,
}

const ANNULUS_NR: usize = 12;
const ANNULUS_NT: usize = 256;

/// Distance of the blow-up of `field` at scale |a| to the best multiple of
/// the limit profile rotated to direction `direction_angle`.
pub fn blowup_distance(
    field: &Field,
    abs_a: f64,
    direction_angle: f64,
    order: f64,
    profile: &LimitProfile,
    annulus: (f64, f64),
) -> Result<BlowUp> {
    let b = blow_up_field(*field, abs_a, order)?;
    let pts = annulus_grid(annulus.0, annulus.1, ANNULUS_NR, ANNULUS_NT);
    let mut u = Vec::with_capacity(pts.len());
    let mut v = Vec::with_capacity(pts.len());
    let mut w = Vec::with_capacity(pts.len());
    for (x, wt) in pts {
        u.push(b.eval(x)?);
        v.push(profile.eval_direction(x, direction_angle)?);
        w.push(wt);
    }
    let (distance, c) = best_multiple(&u, &v, &w);
    Ok(BlowUp { distance, c })
}

/// Distance of phi_0(|a| x)/|a|^order to the best multiple of psi_k on D_2 \ D_1.
pub fn rescaled_reference_distance(field0: &Field, abs_a: f64, alpha: f64, k: i32) -> Result<f64> {
    let order = (alpha - k as f64).abs();
    let b = blow_up_field(*field0, abs_a, order)?;
    let pts = annulus_grid(1.0, 2.0, ANNULUS_NR, ANNULUS_NT);
    let mut u = Vec::with_capacity(pts.len());
    let mut v = Vec::with_capacity(pts.len());
    let mut w = Vec::with_capacity(pts.len());
    for (x, wt) in pts {
        u.push(b.eval(x)?);
        v.push(psi_profile(alpha, k, x));
        w.push(wt);
    }
    Ok(best_multiple(&u, &v, &w).0)
}

/// |a|^{-2 order} || (i grad + A_a) phi_a - e^{i alpha (theta_a - theta_0^a)} (i grad + A_0) phi_0 ||^2.
pub fn eigenfunction_gap(field_a: &Field, field_0: &Field, cfg: &PoleConfig, order: f64, exec: Execution) -> f64 {
    if cfg.is_centered() {
        return 0.0;
    }
    let c0 = PoleConfig { pole: [0.0, 0.0], ..*cfg };
    let apexes = [cfg.pole, [0.0, 0.0]];
    let region = Region {
        other: Some((field_0.mesh, field_0.locator)),
        disk: None,
        cut: Some(cfg.pole),
        apexes: &apexes,
    };
    let total: f64 = overlay::integrate(field_a.mesh, field_a.locator, region, exec, |s| {
        let ga = field_a.covariant_at(s.ta, s.x, cfg);
        let g0 = field_0.covariant_at(s.tb, s.x, &c0);
        let ph = cfg.phase_on_side(s.x, s.side).conj();
        (ga[0] - ph * g0[0]).norm_sqr() + (ga[1] - ph * g0[1]).norm_sqr()
    });
    let abs_a = cfg.pole[0].hypot(cfg.pole[1]);
    total / abs_a.powf(2.0 * order)
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileParams {
    /// Largest element size; defaults to S/20.
    pub h_max: Option<f64>,
    pub n_boundary: usize,
    /// Defaults to the grading for alpha.
    pub grading: Option<f64>,
    pub quadrature_order: usize,
    pub exec: Execution,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams { h_max: None, n_boundary: 256, grading: None, quadrature_order: 4, exec: Execution::Parallel }
    }
}

/// Truncated magnetic-harmonic profile on D_S.
#[derive(Debug, Clone)]
pub struct LimitProfile {
    pub alpha: f64,
    pub k: i32,
    pub s: f64,
    pub pole: Point,
    pub mesh: Mesh,
    pub locator: Locator,
    pub values: Vec<Complex64>,
    /// Vertex index and imposed value on the outer boundary.
    pub boundary_data: Vec<(usize, Complex64)>,
    /// Energy of Psi minus the data extension on D_S \ D_{S/2}.
    pub tail: f64,
    /// max over the circle |x| = S/2 of |Psi - data| / |psi_k|.
    pub far_field_defect: f64,
}

/// e^{i alpha (theta_p - theta_0^p)} psi_k.
pub fn profile_data(cfg: &PoleConfig, k: i32, x: Point) -> Complex64 {
    cfg.phase_unchecked(x).conj() * psi_profile(cfg.alpha, k, x)
}

/// Solve for the profile with pole p = (1,0).
pub fn solve_limit_profile(alpha: f64, k: i32, s: f64, params: &ProfileParams) -> Result<LimitProfile> {
    solve_limit_profile_at(alpha, k, s, [1.0, 0.0], params)
}

/// Solve for the profile with an arbitrary unit pole `p`.
pub fn solve_limit_profile_at(alpha: f64, k: i32, s: f64, p: Point, params: &ProfileParams) -> Result<LimitProfile> {
    if !(s >= 8.0) {
        return Err(Error::InvalidInput(format!("truncation radius must be >= 8, got {s}")));
    }
    if ((p[0].hypot(p[1])) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput("profile pole must be a unit vector".into()));
    }
    let cfg = PoleConfig::new(alpha, p)?;
    let domain: Domain = make_disk_domain(s, params.n_boundary)?;
    let mut mp = MeshParams::new(
        domain,
        params.h_max.unwrap_or(s / 20.0),
        params.grading.unwrap_or_else(|| crate::geometry::default_grading(alpha)),
    );
    mp.extra_centers = vec![[0.0, 0.0]];
    let mesh = mesh_domain_with(&mp, p)?;
    let (kall, _) = assemble_all(&mesh, &cfg, params.quadrature_order, params.exec)?;
    let nv = mesh.n_vertices();
    let mut fixed: Vec<Option<Complex64>> = vec![None; nv];
    let mut boundary_data = Vec::with_capacity(mesh.boundary_vertices.len());
    for &b in &mesh.boundary_vertices {
        let g = profile_data(&cfg, k, mesh.vertices[b]);
        fixed[b] = Some(g);
        boundary_data.push((b, g));
    }
    fixed[mesh.pole_vertex] = Some(Complex64::new(0.0, 0.0));
    let mut dof = vec![usize::MAX; nv];
    let mut free = Vec::new();
    for v in 0..nv {
        if fixed[v].is_none() {
            dof[v] = free.len();
            free.push(v);
        }
    }
    let mut pairs = Vec::new();
    let mut rhs = vec![Complex64::new(0.0, 0.0); free.len()];
    for (i, j, v) in kall.triplets() {
        if dof[i] == usize::MAX {
            continue;
        }
        match fixed[j] {
            Some(g) => rhs[dof[i]] -= v * g,
            None => pairs.push((dof[i], dof[j])),
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut kff: Csr<Complex64> = Csr::from_pattern(free.len(), &pairs);
    for (i, j, v) in kall.triplets() {
        if dof[i] != usize::MAX && dof[j] != usize::MAX {
            let pos = kff.position(dof[i], dof[j]).expect("pattern");
            kff.vals[pos] += v;
        }
    }
    let sol = Factor::new(&kff)?.solve(&rhs);
    let mut values = vec![Complex64::new(0.0, 0.0); nv];
    for v in 0..nv {
        values[v] = match fixed[v] {
            Some(g) => g,
            None => sol[dof[v]],
        };
    }
    let locator = Locator::new(&mesh);
    let mut profile = LimitProfile {
        alpha,
        k,
        s,
        pole: p,
        mesh,
        locator,
        values,
        boundary_data,
        tail: 0.0,
        far_field_defect: 0.0,
    };
    let whole = profile_energy_gap(&profile, None, params.exec);
    let inner = profile_energy_gap(&profile, Some(s / 2.0), params.exec);
    profile.tail = whole - inner;
    profile.far_field_defect = far_field_defect(&profile, s / 2.0)?;
    Ok(profile)
}

impl LimitProfile {
    pub fn config(&self) -> PoleConfig {
        PoleConfig::new(self.alpha, self.pole).expect("validated at construction")
    }

    pub fn field(&self) -> Field<'_> {
        Field::new(&self.mesh, &self.locator, &self.values)
    }

    pub fn eval(&self, x: Point) -> Result<Complex64> {
        self.field().eval(x).ok_or(Error::OutsideMesh(x))
    }

    /// Profile for a pole in direction `angle`, by rotation.
    pub fn eval_direction(&self, x: Point, angle: f64) -> Result<Complex64> {
        let d = angle - self.pole[1].atan2(self.pole[0]);
        let (c, s) = (d.cos(), d.sin());
        let y = [c * x[0] + s * x[1], -s * x[0] + c * x[1]];
        Ok(self.eval(y)? * Complex64::from_polar(1.0, self.k as f64 * d))
    }

    /// int_0^{2 pi} |Psi(r e^{it})|^2 dt.
    pub fn circle_mass(&self, r: f64, q: usize) -> Result<f64> {
        let mut s = 0.0;
        for j in 0..q {
            let t = TAU * j as f64 / q as f64;
            s += self.eval([r * t.cos(), r * t.sin()])?.norm_sqr();
        }
        Ok(s * TAU / q as f64)
    }
}

fn far_field_defect(p: &LimitProfile, r: f64) -> Result<f64> {
    let cfg = p.config();
    let q = 512;
    let mut worst: f64 = 0.0;
    for j in 0..q {
        let t = TAU * (j as f64 + 0.5) / q as f64;
        let x = [r * t.cos(), r * t.sin()];
        let d = (p.eval(x)? - profile_data(&cfg, p.k, x)).norm();
        worst = worst.max(d / psi_profile(p.alpha, p.k, x).norm());
    }
    Ok(worst)
}

/// F(R) = int_{D_R} |(i grad + A_p) Psi - e^{i alpha (theta_p - theta_0^p)} (i grad + A_0) psi_k|^2,
/// over the whole mesh when `r` is `None`.
pub fn profile_energy_gap(p: &LimitProfile, r: Option<f64>, exec: Execution) -> f64 {
    let cfg = p.config();
    let field = p.field();
    let apexes = [p.pole, [0.0, 0.0]];
    let region = Region { other: None, disk: r.map(|r| ([0.0, 0.0], r)), cut: Some(p.pole), apexes: &apexes };
    overlay::integrate(&p.mesh, &p.locator, region, exec, |s| {
        let g = field.covariant_at(s.ta, s.x, &cfg);
        let d = psi_covariant_gradient(p.alpha, p.k, s.x);
        let ph = cfg.phase_on_side(s.x, s.side).conj();
        (g[0] - ph * d[0]).norm_sqr() + (g[1] - ph * d[1]).norm_sqr()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitConstant {
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub l: f64,
    pub gamma: f64,
    /// F(R_max) - F(R_max / 2).
    pub tail: f64,
}

impl LimitConstant {
    /// L > 10 (F(R_max) - F(R_max/2)).
    pub fn tail_margin_ok(&self) -> bool {
        self.l > 10.0 * self.tail
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "R,F")?;
        for (r, f) in self.radii.iter().zip(&self.f) {
            writeln!(w, "{},{}", fmt12(*r), fmt12(*f))?;
        }
        Ok(())
    }
}

/// Default radii for the F curve: powers of sqrt 2 from 1 to S/2.
pub fn default_f_radii(s: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r: f64 = 1.0;
    while r <= s / 2.0 * (1.0 + 1e-12) {
        out.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    out
}

/// Fit F(R) = L - c R^{-gamma} by scanning gamma.
pub fn fit_power_tail(radii: &[f64], f: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, f[f.len() - 1], 0.0);
    for i in 1..=800 {
        let g = 0.005 * i as f64;
        let x: Vec<f64> = radii.iter().map(|r| r.powf(-g)).collect();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = f.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(f).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let l = my - slope * mx;
        let res: f64 = x.iter().zip(f).map(|(a, b)| (l + slope * a - b).powi(2)).sum();
        if res < best.0 && slope <= 0.0 {
            best = (res, l, g);
        }
    }
    (best.1, best.2)
}

pub fn limit_constant(profile: &LimitProfile, radii: &[f64], exec: Execution) -> Result<LimitConstant> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput("need at least three radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[radii.len() - 1] > profile.s / 2.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("radii must increase and stay within S/2 = {}", profile.s / 2.0)));
    }
    let f: Vec<f64> = map_slice(exec, radii, |&r| profile_energy_gap(profile, Some(r), Execution::Sequential));
    if f.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-9)) {
        return Err(Error::Truncation("F is not nondecreasing in R".into()));
    }
    let r_max = radii[radii.len() - 1];
    let tail = f[f.len() - 1] - profile_energy_gap(profile, Some(r_max / 2.0), exec);
    let start = radii.iter().position(|&r| r >= 2.0).unwrap_or(0).min(radii.len() - 3);
    let (l, gamma) = fit_power_tail(&radii[start..], &f[start..]);
    Ok(LimitConstant { radii: radii.to_vec(), f, l, gamma, tail })
}

/// Relative energy-norm difference of two profiles on D_r.
pub fn profile_difference(a: &LimitProfile, b: &LimitProfile, r: f64, exec: Execution) -> Result<f64> {
    if a.pole != b.pole || a.k != b.k || a.alpha != b.alpha {
        return Err(Error::InvalidInput("profiles differ in pole, mode or alpha".into()));
    }
    let cfg = a.config();
    let (fa, fb) = (a.field(), b.field());
    let apexes = [a.pole, [0.0, 0.0]];
    let region = Region { other: Some((&b.mesh, &b.locator)), disk: Some(([0.0, 0.0], r)), cut: None, apexes: &apexes };
    let [d, n]: [f64; 2] = overlay::integrate(&a.mesh, &a.locator, region, exec, |s| {
        let ga = fa.covariant_at(s.ta, s.x, &cfg);
        let gb = fb.covariant_at(s.tb, s.x, &cfg);
        Pair([(ga[0] - gb[0]).norm_sqr() + (ga[1] - gb[1]).norm_sqr(), gb[0].norm_sqr() + gb[1].norm_sqr()])
    })
    .0;
    Ok((d / n).sqrt())
}

#[derive(Default, Clone, Copy)]
struct Pair([f64; 2]);

impl std::ops::AddAssign for Pair {
    fn add_assign(&mut self, o: Pair) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, s: f64) -> Pair {
        Pair([self.0[0] * s, self.0[1] * s])
    }
}

/// (1/|beta|) (1 / int_0^{2pi} |Psi(K e^{it})|^2 dt)^{1/2}.
pub fn predicted_h_ratio(profile: &LimitProfile, beta: Complex64, k_scale: f64) -> Result<f64> {
    Ok(1.0 / (beta.norm() * profile.circle_mass(k_scale, 2048)?.sqrt()))
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "abs_a,lambda_a,diff,H,slope_running,blowup_dist,gap")?;
        for (i, s) in self.samples.iter().enumerate() {
            let pts: Vec<(f64, f64)> = self.samples[..=i].iter().map(|s| (s.abs_a, s.diff.abs())).collect();
            let running = if pts.len() >= 2 && pts.iter().all(|p| p.1 > 0.0) {
                let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
                let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
                spectral::loglog_slope(&x, &y).0
            } else {
                f64::NAN
            };
            let bd = s.blowup.map(|b| b.distance).unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt12(s.abs_a),
                fmt12(s.lambda),
                fmt12(s.diff),
                fmt12(s.h_k),
                fmt12(running),
                fmt12(bd),
                fmt12(s.gap)
            )?;
        }
        Ok(())
    }

    /// Samples with |a| at most `max_abs_a`.
    pub fn samples_below(&self, max_abs_a: f64) -> impl Iterator<Item = &SweepSample> {
        self.samples.iter().filter(move |s| s.abs_a <= max_abs_a * (1.0 + 1e-12))
    }
}

/// Whether `values` decreases, allowing `allowed` increasing steps.
pub fn decreasing_with_exceptions(values: &[f64], allowed: usize) -> bool {
    values.windows(2).filter(|w| w[1] > w[0]).count() <= allowed
}

/// |x - y| / |y|.
pub fn relative_change(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}
