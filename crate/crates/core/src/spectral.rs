//! Fourier structure of a field around a point: circle traces, modal
//! coefficients v_j(r), the R-independent coefficients beta_j and the
//! vanishing order.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{triangle_diameter, Point};
use crate::par::{map_slice, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct CircleTrace {
    pub center: Point,
    pub radius: f64,
    /// Angle of the first sample; sample q sits at `theta0 + 2 pi q / Q`.
    pub theta0: f64,
    pub samples: Vec<Complex64>,
}

impl CircleTrace {
    pub fn q(&self) -> usize {
        self.samples.len()
    }

    /// Integral of |u|^2 dt over the circle (periodic trapezoid).
    pub fn mean_square_integral(&self) -> f64 {
        TAU / self.q() as f64 * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// Sample a P1 field on a circle.
pub fn trace_circle(field: &Field, center: Point, radius: f64, q: usize, theta0: f64) -> Result<CircleTrace> {
    if q < 64 || !q.is_power_of_two() {
        return Err(Error::InvalidInput(format!("sample count must be a power of two >= 64, got {q}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    let mut samples = Vec::with_capacity(q);
    let mut dmax: f64 = 0.0;
    for k in 0..q {
        let t = theta0 + TAU * k as f64 / q as f64;
        let x = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        let (tri, l) = field
            .locator
            .locate(field.mesh, x)
            .ok_or(Error::CircleOutside { center, radius })?;
        dmax = dmax.max(triangle_diameter(field.mesh.tri_points(tri)));
        samples.push(field.value_in(tri, l));
    }
    if radius < 2.0 * dmax {
        return Err(Error::UnderResolved { radius, diameter: dmax });
    }
    Ok(CircleTrace { center, radius, theta0, samples })
}

/// Coefficients v_j = (1/sqrt(2pi)) int u e^{-ijt} dt for j in [-Q/2, Q/2).
#[derive(Debug, Clone, PartialEq)]
pub struct Modes {
    pub coeffs: Vec<Complex64>,
}

impl Modes {
    pub fn q(&self) -> usize {
        self.coeffs.len()
    }

    pub fn get(&self, j: i32) -> Complex64 {
        let q = self.q() as i32;
        if j < -q / 2 || j >= q / 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[j.rem_euclid(q) as usize]
    }

    pub fn norm_sqr_sum(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn fourier_modes(trace: &CircleTrace) -> Modes {
    let q = trace.q();
    let mut buf = trace.samples.clone();
    FftPlanner::<f64>::new().plan_fft_forward(q).process(&mut buf);
    let scale = TAU.sqrt() / q as f64;
    let qi = q as i32;
    let coeffs = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let j = if (k as i32) < qi / 2 { k as i32 } else { k as i32 - qi };
            z * scale * Complex64::from_polar(1.0, -(j as f64) * trace.theta0)
        })
        .collect();
    Modes { coeffs }
}

/// Modal coefficients of a field on a grid of radii around a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTrace {
    pub alpha: f64,
    pub center: Point,
    pub theta0: f64,
    pub radii: Vec<f64>,
    pub modes: Vec<Modes>,
    /// Largest sqrt(sum_j |v_j|^2) over the grid.
    pub amplitude: f64,
    pub parseval_defect: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub q: usize,
    pub exec: Execution,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { q: 256, exec: Execution::Parallel }
    }
}

impl FourierTrace {
    pub fn new(field: &Field, alpha: f64, center: Point, theta0: f64, radii: &[f64], opts: TraceOptions) -> Result<FourierTrace> {
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radii must be increasing".into()));
        }
        let traces: Vec<Result<CircleTrace>> =
            map_slice(opts.exec, radii, |&r| trace_circle(field, center, r, opts.q, theta0));
        let mut modes = Vec::with_capacity(radii.len());
        let mut amplitude: f64 = 0.0;
        let mut parseval_defect: f64 = 0.0;
        for t in traces {
            let t = t?;
            let m = fourier_modes(&t);
            let s = m.norm_sqr_sum();
            let direct = t.mean_square_integral();
            if direct > 0.0 {
                parseval_defect = parseval_defect.max((s - direct).abs() / direct);
            }
            amplitude = amplitude.max(s.sqrt());
            modes.push(m);
        }
        Ok(FourierTrace { alpha, center, theta0, radii: radii.to_vec(), modes, amplitude, parseval_defect })
    }

    pub fn v(&self, i: usize, j: i32) -> Complex64 {
        self.modes[i].get(j)
    }

    /// v_j at radius r by linear interpolation in the grid.
    pub fn v_at(&self, r: f64, j: i32) -> Complex64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.v(0, j);
        }
        if r >= self.radii[n - 1] {
            return self.v(n - 1, j);
        }
        let k = self.radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.radii[k], self.radii[k + 1]);
        let s = (r - r0) / (r1 - r0);
        self.v(k, j) * (1.0 - s) + self.v(k + 1, j) * s
    }

    pub fn write_csv<W: Write>(&self, mut w: W, jmax: i32) -> Result<()> {
        writeln!(w, "r,j,re_v,im_v")?;
        for (i, r) in self.radii.iter().enumerate() {
            for j in -jmax..=jmax {
                let v = self.v(i, j);
                writeln!(w, "{},{},{},{}", fmt12(*r), j, fmt12(v.re), fmt12(v.im))?;
            }
        }
        Ok(())
    }
}

/// Format with 12 significant digits, like `%.12g`.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if !(-4..12).contains(&e) {
        let s = format!("{:.11e}", x);
        let (m, ex) = s.split_once('e').unwrap();
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        let exv: i32 = ex.parse().unwrap();
        format!("{m}e{}{:02}", if exv < 0 { '-' } else { '+' }, exv.abs())
    } else {
        let dec = (11 - e).max(0) as usize;
        let s = format!("{:.*}", dec, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

/// Grid of radii from `s_min` to `max(r_grid)` with spacing close to `ds`
/// that contains every value of `r_grid`.
pub fn beta_grid(s_min: f64, ds: f64, r_grid: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![s_min];
    let mut anchors: Vec<f64> = r_grid.iter().copied().filter(|&r| r > s_min).collect();
    anchors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    anchors.dedup();
    let mut lo = s_min;
    for &hi in &anchors {
        let n = ((hi - lo) / ds).ceil().max(1.0) as usize;
        for k in 1..=n {
            pts.push(if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 });
        }
        lo = hi;
    }
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate {
    pub j: i32,
    pub beta: Complex64,
    /// max_R |beta(R) - mean| / |mean|.
    pub spread: f64,
    pub per_r: Vec<(f64, Complex64)>,
    /// Mode below the noise floor of the trace.
    pub negligible: bool,
}

/// Relative size below which a mode is treated as absent.
pub const NOISE_FLOOR: f64 = 1e-4;

/// beta_j from the integral formula evaluated at each R in `r_grid`.
///
/// The trace grid must start at the resolved radius s_min and contain every
/// R. Below s_min the mode is replaced by the power law b s^nu fitted at
/// s_min.
pub fn beta_coefficient(ft: &FourierTrace, j: i32, lambda: f64, r_grid: &[f64]) -> Result<BetaEstimate> {
    let b = beta_estimate(ft, j, lambda, r_grid)?;
    if !b.negligible && b.spread > 0.1 {
        return Err(Error::RDependence { mode: j, spread: b.spread });
    }
    Ok(b)
}

/// As [`beta_coefficient`], without rejecting R-dependent estimates.
pub fn beta_estimate(ft: &FourierTrace, j: i32, lambda: f64, r_grid: &[f64]) -> Result<BetaEstimate> {
    let nu = (ft.alpha - j as f64).abs();
    let s = &ft.radii;
    let s_min = s[0];
    let b = ft.v(0, j) / s_min.powf(nu);
    let mut per_r = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let idx = s
            .iter()
            .position(|&x| (x - r).abs() <= 1e-12 * r)
            .ok_or_else(|| Error::InvalidInput(format!("radius {r} is not on the trace grid")))?;
        let r2nu = r.powf(2.0 * nu);
        let kernel = |x: f64| x.powf(1.0 - nu) - x.powf(1.0 + nu) / r2nu;
        let core = b * (s_min * s_min / 2.0 - s_min.powf(2.0 + 2.0 * nu) / ((2.0 + 2.0 * nu) * r2nu));
        let mut integral = core;
        for k in 0..idx {
            let (x0, x1) = (s[k], s[k + 1]);
            integral += (ft.v(k, j) * kernel(x0) + ft.v(k + 1, j) * kernel(x1)) * (0.5 * (x1 - x0));
        }
        let beta = ft.v(idx, j) / r.powf(nu) + integral * (lambda / (2.0 * nu));
        per_r.push((r, beta));
    }
    let mean = per_r.iter().map(|p| p.1).sum::<Complex64>() / per_r.len() as f64;
    let vmax = (0..s.len()).map(|i| ft.v(i, j).norm()).fold(0.0, f64::max);
    let negligible = vmax < NOISE_FLOOR * ft.amplitude;
    let spread = if mean.norm() > 0.0 {
        per_r.iter().map(|p| (p.1 - mean).norm()).fold(0.0, f64::max) / mean.norm()
    } else {
        0.0
    };
    Ok(BetaEstimate { j, beta: mean, spread, per_r, negligible })
}

/// beta_j for |j| <= jmax.
pub fn beta_table(ft: &FourierTrace, jmax: i32, lambda: f64, r_grid: &[f64]) -> Result<Vec<BetaEstimate>> {
    (-jmax..=jmax).map(|j| beta_coefficient(ft, j, lambda, r_grid)).collect()
}

pub fn write_beta_csv<W: Write>(betas: &[BetaEstimate], mut w: W) -> Result<()> {
    writeln!(w, "j,re_beta,im_beta,spread")?;
    for b in betas {
        writeln!(w, "{},{},{},{}", b.j, fmt12(b.beta.re), fmt12(b.beta.im), fmt12(b.spread))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanishingOrder {
    pub k: i32,
    pub order: f64,
    pub beta_k: Complex64,
    /// Log-log slope of |v_k(r)| on the small-r part of the grid.
    pub slope: f64,
    pub slope_consistent: bool,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Dominant mode at the center: among modes with |beta_j| above
/// `threshold * max |beta|`, the one with the smallest |alpha - j|.
pub fn vanishing_order(ft: &FourierTrace, betas: &[BetaEstimate], threshold: f64) -> Result<VanishingOrder> {
    let bmax = betas.iter().filter(|b| !b.negligible).map(|b| b.beta.norm()).fold(0.0, f64::max);
    let best = betas
        .iter()
        .filter(|b| !b.negligible && b.beta.norm() > threshold * bmax && bmax > 0.0)
        .min_by(|a, b| {
            let (na, nb) = ((ft.alpha - a.j as f64).abs(), (ft.alpha - b.j as f64).abs());
            na.partial_cmp(&nb).unwrap()
        })
        .ok_or(Error::DegenerateField)?;
    let order = (ft.alpha - best.j as f64).abs();
    let r_hi = 0.1f64.max(ft.radii[0] * 4.0);
    let sel: Vec<usize> = (0..ft.radii.len()).filter(|&i| ft.radii[i] <= r_hi).collect();
    let xs: Vec<f64> = sel.iter().map(|&i| ft.radii[i]).collect();
    let ys: Vec<f64> = sel.iter().map(|&i| ft.v(i, best.j).norm()).collect();
    let slope = if xs.len() >= 2 { loglog_slope(&xs, &ys).0 } else { f64::NAN };
    Ok(VanishingOrder {
        k: best.j,
        order,
        beta_k: best.beta,
        slope,
        slope_consistent: (slope - order).abs() <= 0.05,
    })
}

/// (1/sqrt(2pi)) sum_{|j| <= j_trunc} v_j(r) e^{ijt}; `j_trunc >= Q/2` uses all modes.
pub fn reconstruct_expansion(ft: &FourierTrace, r: f64, t: f64, j_trunc: i32) -> Complex64 {
    let q = ft.modes[0].q() as i32;
    let (lo, hi) = if j_trunc >= q / 2 { (-q / 2, q / 2 - 1) } else { (-j_trunc, j_trunc) };
    let mut s = Complex64::new(0.0, 0.0);
    for j in lo..=hi {
        s += ft.v_at(r, j) * Complex64::from_polar(1.0, j as f64 * t);
    }
    s / TAU.sqrt()
}

/// L²(dt) norm of the part of the trace outside `keep`, per radius.
pub fn truncation_remainder(ft: &FourierTrace, keep: &[i32]) -> Vec<f64> {
    (0..ft.radii.len())
        .map(|i| {
            let m = &ft.modes[i];
            let q = m.q() as i32;
            (-q / 2..q / 2)
                .filter(|j| !keep.contains(j))
                .map(|j| m.get(j).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}
