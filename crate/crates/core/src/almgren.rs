//! Almgren frequency H, E, N on disks about the origin, the pole term and
//! the inequality checks built on them.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{disk_integrals, Field};
use crate::gauge::PoleConfig;
use crate::geometry::{norm, Point};
use crate::par::{map_slice, Execution};
use crate::spectral::{fmt12, trace_circle};

#[derive(Debug, Clone, PartialEq)]
pub struct AlmgrenCurve {
    pub center: Point,
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub e: Vec<f64>,
    pub n: Vec<f64>,
    /// int_{D_r} |u|^2 on the grid.
    pub mass: Vec<f64>,
}

/// Samples per circle for H.
pub const H_SAMPLES: usize = 2048;

/// H, E and N of a field on the disks D_r about the origin.
pub fn frequency_curve(field: &Field, lambda: f64, cfg: &PoleConfig, radii: &[f64], exec: Execution) -> Result<AlmgrenCurve> {
    let center = [0.0, 0.0];
    let a = norm(cfg.pole);
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must be a nonempty increasing grid".into()));
    }
    if radii[0] <= a {
        return Err(Error::InvalidInput(format!("radius {} does not exceed |a| = {a}", radii[0])));
    }
    let rows = map_slice(exec, radii, |&r| -> Result<(f64, f64, f64)> {
        let tr = trace_circle(field, center, r, H_SAMPLES, 0.0)?;
        let h = tr.mean_square_integral();
        let di = disk_integrals(field, cfg, center, r, Execution::Sequential);
        Ok((h, di.energy - lambda * di.mass, di.mass))
    });
    let mut curve = AlmgrenCurve { center, radii: radii.to_vec(), h: vec![], e: vec![], n: vec![], mass: vec![] };
    for (row, &r) in rows.into_iter().zip(radii) {
        let (h, e, m) = row?;
        if !(h > 0.0) {
            return Err(Error::NonPositiveH(r));
        }
        curve.h.push(h);
        curve.e.push(e);
        curve.n.push(e / h);
        curve.mass.push(m);
    }
    Ok(curve)
}

impl AlmgrenCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,H,E,N")?;
        for i in 0..self.radii.len() {
            writeln!(w, "{},{},{},{}", fmt12(self.radii[i]), fmt12(self.h[i]), fmt12(self.e[i]), fmt12(self.n[i]))?;
        }
        Ok(())
    }

    pub fn h_positive(&self) -> bool {
        self.h.iter().all(|&h| h > 0.0)
    }
}

/// Largest relative defect between the centered difference of H and (2/r)E
/// over interior grid points, relative to max(|2E/r|, H/r).
pub fn dh_identity_check(curve: &AlmgrenCurve) -> Result<f64> {
    let n = curve.radii.len();
    if n < 5 {
        return Err(Error::InvalidInput("need at least 5 grid points".into()));
    }
    let r = &curve.radii;
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let (h0, h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i], r[i + 1] - r[i - 1]);
        // Second-order derivative on a nonuniform grid.
        let dh = -h1 / (h0 * h2) * curve.h[i - 1] + (h1 - h0) / (h0 * h1) * curve.h[i] + h0 / (h1 * h2) * curve.h[i + 1];
        let rhs = 2.0 / r[i] * curve.e[i];
        let scale = rhs.abs().max(curve.h[i] / r[i]);
        worst = worst.max((dh - rhs).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleTerm {
    pub value: f64,
    pub beta0: Complex64,
    pub beta1: Complex64,
    pub a: Point,
}

impl PoleTerm {
    /// 2 alpha (1 - alpha) |a| |beta0| |beta1|.
    pub fn bound(&self, alpha: f64) -> f64 {
        2.0 * alpha * (1.0 - alpha) * norm(self.a) * self.beta0.norm() * self.beta1.norm()
    }
}

/// M = 2 alpha (1 - alpha) Re(beta0 conj(beta1) (a1 - i a2)).
pub fn pole_term(beta0: Complex64, beta1: Complex64, a: Point, alpha: f64) -> PoleTerm {
    let z = beta0 * beta1.conj() * Complex64::new(a[0], -a[1]);
    PoleTerm { value: 2.0 * alpha * (1.0 - alpha) * z.re, beta0, beta1, a }
}

/// Whether N(r) <= order + delta at every grid radius in the window.
pub fn frequency_bound_check(curve: &AlmgrenCurve, order: f64, delta: f64, window: (f64, f64)) -> bool {
    curve
        .radii
        .iter()
        .zip(&curve.n)
        .filter(|(r, _)| **r >= window.0 - 1e-12 && **r <= window.1 + 1e-12)
        .all(|(_, n)| *n <= order + delta)
}

/// Smallest ratio, over grid pairs r1 < r2 in `[r_lo, r0]`, of
/// H(r2)/H(r1) to the lower bound e^{-L(2+s)r0^2} (r2/r1)^{2(s-delta)}
/// with s = sqrt(mu_1). Values >= 1 mean the bound holds.
pub fn h_growth_margin(curve: &AlmgrenCurve, sqrt_mu1: f64, lambda_max: f64, delta: f64, r_lo: f64, r0: f64) -> f64 {
    let idx: Vec<usize> = (0..curve.radii.len())
        .filter(|&i| curve.radii[i] >= r_lo - 1e-12 && curve.radii[i] <= r0 + 1e-12)
        .collect();
    let c = (-lambda_max * (2.0 + sqrt_mu1) * r0 * r0).exp();
    let mut worst = f64::INFINITY;
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            let bound = c * (curve.radii[j] / curve.radii[i]).powf(2.0 * (sqrt_mu1 - delta));
            worst = worst.min(curve.h[j] / curve.h[i] / bound);
        }
    }
    worst
}

/// e^{L r^2 / (1 - L r0^2)} (N(r) + 1) on grid radii up to r0.
pub fn perturbed_frequency(curve: &AlmgrenCurve, lambda: f64, r0: f64) -> Vec<(f64, f64)> {
    let d = 1.0 - lambda * r0 * r0;
    curve
        .radii
        .iter()
        .zip(&curve.n)
        .filter(|(r, _)| **r <= r0 + 1e-12)
        .map(|(r, n)| (*r, (lambda * r * r / d).exp() * (n + 1.0)))
        .collect()
}

/// Whether a sequence is nondecreasing up to a relative `slack`.
pub fn approximately_monotone(values: &[(f64, f64)], slack: f64) -> bool {
    let mut best = f64::NEG_INFINITY;
    for &(_, v) in values {
        if v < best * (1.0 - slack) {
            return false;
        }
        best = best.max(v);
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// Hardy left side over (min_j |j - alpha|)^-2 times the energy.
    pub hardy_ratio: f64,
    /// Poincare left side over right side.
    pub poincare_ratio: f64,
}

impl InequalityReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.hardy_ratio <= 1.0 + slack && self.poincare_ratio <= 1.0 + slack
    }
}

/// Hardy inequality on D_r(a) and Poincare inequality on D_r(0) for a field.
pub fn inequality_check(field: &Field, cfg: &PoleConfig, r_hardy: f64, r_poincare: f64, exec: Execution) -> Result<InequalityReport> {
    let mu = (0..=1).map(|j| (j as f64 - cfg.alpha).abs()).fold(f64::INFINITY, f64::min);
    let h = disk_integrals(field, cfg, cfg.pole, r_hardy, exec);
    let hardy_ratio = if h.energy > 0.0 { mu * mu * h.hardy / h.energy } else { 0.0 };
    let p = disk_integrals(field, cfg, [0.0, 0.0], r_poincare, exec);
    let tr = trace_circle(field, [0.0, 0.0], r_poincare, H_SAMPLES, 0.0)?;
    let rhs = tr.mean_square_integral() + p.energy;
    let lhs = p.mass / (r_poincare * r_poincare);
    Ok(InequalityReport { hardy_ratio, poincare_ratio: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY } })
}
