//! Lowest eigenpairs of K u = lambda M u, simplicity checks and phase
//! alignment against a reference eigenfunction.

use std::io::Write;

use faer::{c64, Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::gauge::PoleConfig;
use crate::linalg::Factor;
use crate::geometry::Mesh;
use crate::locate::Locator;
use crate::overlay::{self, Region};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Coefficients over the free degrees of freedom.
    pub vector: Vec<Complex64>,
    /// Coefficients over all mesh vertices (zero where constrained).
    pub nodal: Vec<Complex64>,
    pub l2_norm: f64,
    pub residual: f64,
    pub phase_aligned_against: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSlice {
    pub pairs: Vec<EigenPair>,
    /// Gaps around the target eigenvalue (index `target`, 1-based).
    pub target: usize,
    pub gap_below_target: f64,
    pub gap_above_target: f64,
    pub simple: bool,
}

impl SpectrumSlice {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// Recompute the gap fields for target `n0` with relative threshold `rel_gap`.
    pub fn set_target(&mut self, n0: usize, rel_gap: f64) {
        let l = self.lambdas();
        self.target = n0;
        self.gap_below_target = if n0 >= 2 { l[n0 - 1] - l[n0 - 2] } else { f64::INFINITY };
        self.gap_above_target = if n0 < l.len() { l[n0] - l[n0 - 1] } else { f64::INFINITY };
        self.simple = check_simplicity(self, n0, rel_gap);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
    pub exec: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 400, seed: 0x5eed, guard: 4, exec: Execution::Parallel }
    }
}

/// Systems up to this size are solved densely.
const DENSE_LIMIT: usize = 200;

fn to_mat(cols: &[Complex64], n: usize, m: usize) -> Mat<c64> {
    Mat::from_fn(n, m, |i, j| cols[j * n + i])
}

fn from_mat(a: &Mat<c64>) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(a.nrows() * a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            v.push(a[(i, j)]);
        }
    }
    v
}

struct Ops<'a> {
    sys: &'a AssembledSystem,
    exec: Execution,
}

impl Ops<'_> {
    fn k(&self, x: &Mat<c64>) -> Mat<c64> {
        let n = x.nrows();
        to_mat(&self.sys.stiffness.mul_block(&from_mat(x), x.ncols(), self.exec), n, x.ncols())
    }
    fn m(&self, x: &Mat<c64>) -> Mat<c64> {
        let n = x.nrows();
        to_mat(&self.sys.mass.mul_block(&from_mat(x), x.ncols(), self.exec), n, x.ncols())
    }
}

fn hermitian_eigen(a: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let n = a.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let e = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NotConverged { iterations: 0, residual: f64::NAN })?;
    let s = e.S().column_vector();
    let vals = (0..n).map(|i| s[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// M-orthonormalize the columns of `y` (SVQB), dropping dependent directions.
fn svqb(y: &Mat<c64>, my: &Mat<c64>) -> Result<Mat<c64>> {
    let g = y.adjoint() * my;
    let k = g.ncols();
    let d: Vec<f64> = (0..k).map(|i| g[(i, i)].re.max(0.0)).collect();
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    if dmax == 0.0 {
        return Ok(Mat::zeros(y.nrows(), 0));
    }
    let keep: Vec<usize> = (0..k).filter(|&i| d[i] > 1e-28 * dmax).collect();
    let gs = Mat::from_fn(keep.len(), keep.len(), |i, j| {
        g[(keep[i], keep[j])] / (d[keep[i]] * d[keep[j]]).sqrt()
    });
    let (theta, u) = hermitian_eigen(&gs)?;
    let tmax = theta.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] > 1e-12 * tmax).collect();
    let coef = Mat::from_fn(k, cols.len(), |i, j| {
        match keep.iter().position(|&q| q == i) {
            Some(p) => u[(p, cols[j])] / (d[i].sqrt() * theta[cols[j]].sqrt()),
            None => c64::new(0.0, 0.0),
        }
    });
    Ok(y * &coef)
}

fn hcat(blocks: &[&Mat<c64>]) -> Mat<c64> {
    let n = blocks[0].nrows();
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(n, total);
    let mut c = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            for i in 0..n {
                out[(i, c)] = b[(i, j)];
            }
            c += 1;
        }
    }
    out
}

fn columns(a: &Mat<c64>, cols: &[usize]) -> Mat<c64> {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

fn col_norm(a: &Mat<c64>, j: usize) -> f64 {
    (0..a.nrows()).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt()
}

fn residuals(k: &Mat<c64>, m: &Mat<c64>, lambda: &[f64]) -> (Mat<c64>, Vec<f64>) {
    let n = k.nrows();
    let r = Mat::from_fn(n, lambda.len(), |i, j| k[(i, j)] - m[(i, j)] * lambda[j]);
    let res = (0..lambda.len())
        .map(|j| col_norm(&r, j) / (lambda[j].abs().max(1e-300) * col_norm(m, j)))
        .collect();
    (r, res)
}

fn rayleigh_ritz(ops: &Ops, s: &Mat<c64>, nb: usize) -> Result<(Vec<f64>, Mat<c64>)> {
    let ks = ops.k(s);
    let a = s.adjoint() * &ks;
    let (theta, c) = hermitian_eigen(&a)?;
    let nb = nb.min(theta.len());
    Ok((theta[..nb].to_vec(), columns(&c, &(0..nb).collect::<Vec<_>>())))
}

fn lobpcg(sys: &AssembledSystem, m: usize, opts: &SolverOptions) -> Result<(Vec<f64>, Mat<c64>)> {
    let n = sys.dim();
    let nb = (m + opts.guard).min(n / 2).max(m);
    let ops = Ops { sys, exec: opts.exec };
    let prec = Factor::new(&sys.stiffness)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x0 = Mat::from_fn(n, nb, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    // A few inverse-iteration sweeps give a good starting subspace.
    let mut x = prec.solve_mat(&ops.m(&x0));
    x = prec.solve_mat(&ops.m(&x));
    let mx = ops.m(&x);
    x = svqb(&x, &mx)?;
    if x.ncols() < nb {
        return Err(Error::NotPositiveDefinite("mass matrix is singular on the start block".into()));
    }
    let (mut lambda, c) = rayleigh_ritz(&ops, &x, nb)?;
    x = &x * &c;
    let mut p: Option<Mat<c64>> = None;
    let mut worst = f64::INFINITY;
    for it in 0..opts.max_iter {
        let kx = ops.k(&x);
        let mx = ops.m(&x);
        let (r, res) = residuals(&kx, &mx, &lambda);
        worst = res[..m].iter().cloned().fold(0.0, f64::max);
        if worst < opts.tol {
            return Ok((lambda[..m].to_vec(), columns(&x, &(0..m).collect::<Vec<_>>())));
        }
        let active: Vec<usize> = (0..nb).filter(|&j| res[j] >= 0.1 * opts.tol).collect();
        let mut w = prec.solve_mat(&columns(&r, &active));
        let mut blocks: Vec<Mat<c64>> = vec![w.clone()];
        if let Some(pp) = &p {
            blocks.push(pp.clone());
        }
        let refs: Vec<&Mat<c64>> = blocks.iter().collect();
        w = hcat(&refs);
        for _ in 0..2 {
            let proj = mx.adjoint() * &w;
            w = &w - &x * &proj;
        }
        let mut y = svqb(&w, &ops.m(&w))?;
        let proj = mx.adjoint() * &y;
        y = &y - &x * &proj;
        y = svqb(&y, &ops.m(&y))?;
        let s = hcat(&[&x, &y]);
        let (theta, c) = rayleigh_ritz(&ops, &s, nb)?;
        let cy = Mat::from_fn(y.ncols(), nb, |i, j| c[(nb + i, j)]);
        let newp = &y * &cy;
        x = &s * &c;
        p = Some(newp);
        lambda = theta;
        if it + 1 == opts.max_iter {
            break;
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, residual: worst })
}

fn dense_solve(sys: &AssembledSystem, m: usize) -> Result<(Vec<f64>, Mat<c64>)> {
    let n = sys.dim();
    let mut kd = Mat::<c64>::zeros(n, n);
    let mut md = vec![0.0; n * n];
    for (i, j, v) in sys.stiffness.triplets() {
        kd[(i, j)] = v;
    }
    for (i, j, v) in sys.mass.triplets() {
        md[i * n + j] = v;
    }
    // Real Cholesky M = L L^T.
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = md[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite("mass matrix".into()));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = md[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    // C = L^{-1} K L^{-T}
    let lsolve = |b: &mut [c64]| {
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= b[k] * l[i * n + k];
            }
            b[i] = s / l[i * n + i];
        }
    };
    let ltsolve = |b: &mut [c64]| {
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= b[k] * l[k * n + i];
            }
            b[i] = s / l[i * n + i];
        }
    };
    let mut tmp = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<c64> = (0..n).map(|i| kd[(i, j)]).collect();
        lsolve(&mut col);
        for i in 0..n {
            tmp[(i, j)] = col[i];
        }
    }
    let mut c = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        let mut row: Vec<c64> = (0..n).map(|j| tmp[(i, j)].conj()).collect();
        lsolve(&mut row);
        for j in 0..n {
            c[(i, j)] = row[j].conj();
        }
    }
    let (vals, u) = hermitian_eigen(&c)?;
    let mut x = Mat::<c64>::zeros(n, m);
    for j in 0..m {
        let mut col: Vec<c64> = (0..n).map(|i| u[(i, j)]).collect();
        ltsolve(&mut col);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    Ok((vals[..m].to_vec(), x))
}

/// The `m` smallest eigenpairs, sorted ascending, M-normalized.
///
/// Each eigenvector's phase is fixed so that its largest-modulus component
/// is real and positive.
pub fn solve_lowest(sys: &AssembledSystem, m: usize, opts: &SolverOptions) -> Result<SpectrumSlice> {
    let n = sys.dim();
    if m == 0 {
        return Err(Error::InvalidInput("need at least one eigenpair".into()));
    }
    let dense = n <= DENSE_LIMIT;
    if (dense && m > n) || (!dense && m > n / 4) {
        return Err(Error::InvalidInput(format!("cannot compute {m} eigenpairs of a system of size {n}")));
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let (lambda, x) = if dense { dense_solve(sys, m)? } else { lobpcg(sys, m, opts)? };
    let mut pairs = Vec::with_capacity(m);
    for j in 0..m {
        let mut v: Vec<Complex64> = (0..n).map(|i| x[(i, j)]).collect();
        let nrm = sys.mass.quad_form(&v).re.sqrt();
        let (imax, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
            if z.norm() > acc.1 * (1.0 + 1e-9) {
                (i, z.norm())
            } else {
                acc
            }
        });
        let ph = v[imax].conj() / v[imax].norm();
        for z in v.iter_mut() {
            *z *= ph / nrm;
        }
        let kv = sys.stiffness.mul_vec(&v, Execution::Sequential);
        let mv = sys.mass.mul_vec(&v, Execution::Sequential);
        let lam = lambda[j];
        let r: f64 = kv.iter().zip(&mv).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
        let mn: f64 = mv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let residual = r / (lam.abs().max(1e-300) * mn);
        let l2_norm = sys.mass.quad_form(&v).re.sqrt();
        pairs.push(EigenPair {
            lambda: lam,
            nodal: sys.expand(&v),
            vector: v,
            l2_norm,
            residual,
            phase_aligned_against: None,
        });
    }
    pairs.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    if !dense && worst >= opts.tol {
        return Err(Error::NotConverged { iterations: opts.max_iter, residual: worst });
    }
    let mut slice = SpectrumSlice {
        pairs,
        target: 1,
        gap_below_target: 0.0,
        gap_above_target: 0.0,
        simple: false,
    };
    slice.set_target(1, 1e-3);
    Ok(slice)
}

/// Whether eigenvalue `n0` (1-based) is separated from its neighbours by
/// more than `rel_gap * lambda_{n0}`.
pub fn check_simplicity(slice: &SpectrumSlice, n0: usize, rel_gap: f64) -> bool {
    let l = slice.lambdas();
    if n0 == 0 || n0 > l.len() {
        return false;
    }
    let lam = l[n0 - 1];
    let below = if n0 >= 2 { lam - l[n0 - 2] } else { f64::INFINITY };
    let above = if n0 < l.len() { l[n0] - lam } else { f64::INFINITY };
    below.min(above) > rel_gap * lam
}

/// Overlap integral of e^{i alpha (theta_0^a - theta_a)} phi_a conj(phi_0).
pub fn gauge_overlap(
    phi_a: &[Complex64],
    mesh_a: &Mesh,
    loc_a: &Locator,
    phi_0: &[Complex64],
    mesh_0: &Mesh,
    loc_0: &Locator,
    cfg: &PoleConfig,
    exec: Execution,
) -> Complex64 {
    let fa = Field::new(mesh_a, loc_a, phi_a);
    let f0 = Field::new(mesh_0, loc_0, phi_0);
    let apexes = [cfg.pole, [0.0, 0.0]];
    let region = Region { other: Some((mesh_0, loc_0)), disk: None, cut: Some(cfg.pole), apexes: &apexes };
    overlay::integrate(mesh_a, loc_a, region, exec, |s| {
        let ph = cfg.phase_on_side(s.x, s.side);
        ph * fa.value_at(s.ta, s.x) * f0.value_at(s.tb, s.x).conj()
    })
}

/// Multiply `pair` by the unit constant that makes the gauge overlap with
/// `reference` real and positive.
#[allow(clippy::too_many_arguments)]
pub fn align_phase(
    pair: &EigenPair,
    mesh_a: &Mesh,
    loc_a: &Locator,
    reference: &EigenPair,
    mesh_0: &Mesh,
    loc_0: &Locator,
    cfg: &PoleConfig,
    exec: Execution,
) -> Result<EigenPair> {
    let ov = gauge_overlap(&pair.nodal, mesh_a, loc_a, &reference.nodal, mesh_0, loc_0, cfg, exec);
    if ov.norm() < 1e-10 {
        return Err(Error::AmbiguousPhase(ov.norm()));
    }
    let mult = ov.conj() / ov.norm();
    let mut out = pair.clone();
    out.vector.iter_mut().for_each(|z| *z *= mult);
    out.nodal.iter_mut().for_each(|z| *z *= mult);
    out.phase_aligned_against = Some(format!("a=({:.12e},{:.12e})", cfg.pole[0], cfg.pole[1]));
    Ok(out)
}

/// Write the eigenpair dump: header with lambda and residual, then `i re im`
/// over all mesh vertices.
pub fn write_eigenpair<W: Write>(pair: &EigenPair, mut w: W) -> Result<()> {
    writeln!(w, "# lambda {:.16e} residual {:.16e}", pair.lambda, pair.residual)?;
    for (i, z) in pair.nodal.iter().enumerate() {
        writeln!(w, "{i} {:.16e} {:.16e}", z.re, z.im)?;
    }
    Ok(())
}
