//! Fractional-order Bessel functions, their zeros, and the exact spectrum of
//! the unit disk with a centered pole.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::check_alpha;
use crate::geometry::Point;
use crate::quad::gauss_legendre;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (Lanczos approximation with reflection).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (TAU).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

fn series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let q = -h * h;
    let mut term = h.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k as f64 * (k as f64 + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > 2 {
            break;
        }
    }
    sum
}

fn miller(nu: f64, x: f64) -> f64 {
    let n = (x.ceil() as usize + 40 + (10.0 * x.cbrt()).ceil() as usize) | 1;
    // Downward recurrence for J_{nu+k}, k = n..0, accumulating the
    // normalization sum (x/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}.
    let mut f = vec![0.0; n + 2];
    f[n + 1] = 0.0;
    f[n] = 1e-300;
    for k in (1..=n).rev() {
        let mu = nu + k as f64;
        f[k - 1] = 2.0 * mu / x * f[k] - f[k + 1];
        if f[k - 1].abs() > 1e250 {
            for v in f[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut g = gamma(nu + 1.0);
    let mut norm = g * f[0];
    for k in 1..=(n / 2) {
        // g = Gamma(nu+k)/k!
        if k > 1 {
            g *= (nu + k as f64 - 1.0) / k as f64;
        }
        norm += (nu + 2.0 * k as f64) * g * f[2 * k];
    }
    (0.5 * x).powf(nu) * f[0] / norm
}

/// Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(x >= 0.0) {
        return Err(Error::InvalidInput(format!("bessel_j needs nu, x >= 0 (nu={nu}, x={x})")));
    }
    if x > 1e4 {
        return Err(Error::BesselOverflow(x));
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x <= switch_radius(nu) {
        Ok(series(nu, x))
    } else {
        Ok(miller(nu, x))
    }
}

pub fn switch_radius(nu: f64) -> f64 {
    10f64.max(2.0 * nu)
}

/// Derivative J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x).
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    Ok(nu / x * bessel_j(nu, x)? - bessel_j(nu + 1.0, x)?)
}

/// The first `count` positive zeros of J_nu.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!("zero search needs nu >= 0, got {nu}")));
    }
    let step = 0.25;
    let mut zeros = Vec::with_capacity(count);
    let mut a = nu.max(step);
    let mut fa = bessel_j(nu, a)?;
    while zeros.len() < count {
        let b = a + step;
        if b > 1e4 {
            return Err(Error::Bracket(format!("no bracket for zero {} of J_{nu}", zeros.len() + 1)));
        }
        let fb = bessel_j(nu, b)?;
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = bessel_j(nu, mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

/// The m-th positive zero j_{nu,m}.
pub fn bessel_zero(nu: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("zero index starts at 1".into()));
    }
    if !(0.0..=10.0).contains(&nu) || m > 20 {
        return Err(Error::InvalidInput(format!("zero search supports nu in [0,10], m <= 20 (nu={nu}, m={m})")));
    }
    Ok(bessel_zeros(nu, m)?[m - 1])
}

/// One separated eigenfunction J_nu(z r) e^{ijt} of the unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskEntry {
    pub j: i32,
    pub m: usize,
    pub nu: f64,
    pub zero: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskEigenTable {
    pub alpha: f64,
    pub entries: Vec<DiskEntry>,
}

/// The lowest `count` eigenvalues of the unit disk with centered pole.
pub fn disk_spectrum(alpha: f64, count: usize) -> Result<DiskEigenTable> {
    check_alpha(alpha)?;
    let mut entries: Vec<DiskEntry> = Vec::new();
    // Visit modes by increasing nu = |alpha - j|; stop once the first zero
    // of the next mode exceeds the current count-th eigenvalue.
    let span = 2 * count as i32 + 4;
    let mut js: Vec<i32> = (-span..=span).collect();
    js.sort_by(|a, b| {
        let (na, nb) = ((alpha - *a as f64).abs(), (alpha - *b as f64).abs());
        na.partial_cmp(&nb).unwrap().then(a.cmp(b))
    });
    for &jj in &js {
        let nu = (alpha - jj as f64).abs();
        let bound = if entries.len() >= count {
            let mut l: Vec<f64> = entries.iter().map(|e| e.lambda).collect();
            l.sort_by(|a, b| a.partial_cmp(b).unwrap());
            l[count - 1]
        } else {
            f64::INFINITY
        };
        let zeros = bessel_zeros(nu, 1)?;
        if zeros[0] * zeros[0] > bound {
            break;
        }
        let zs = bessel_zeros(nu, count)?;
        for (m, z) in zs.into_iter().enumerate() {
            if z * z > bound {
                break;
            }
            entries.push(DiskEntry { j: jj, m: m + 1, nu, zero: z, lambda: z * z });
        }
    }
    entries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap().then(a.j.cmp(&b.j)).then(a.m.cmp(&b.m)));
    entries.truncate(count);
    Ok(DiskEigenTable { alpha, entries })
}

/// An L²-normalized oracle eigenfunction with precomputed constants.
#[derive(Debug, Clone, Copy)]
pub struct DiskMode {
    pub entry: DiskEntry,
    /// Amplitude: the function is `c J_nu(z r) e^{ijt}`.
    pub c: f64,
}

impl DiskMode {
    pub fn new(entry: DiskEntry) -> Result<DiskMode> {
        // 2 pi int_0^1 r J_nu(z r)^2 dr by composite Gauss with panels
        // refined geometrically toward r = 0.
        let (x, w) = gauss_legendre(12);
        let mut cuts = vec![0.0];
        for l in (1..=8).rev() {
            cuts.push(0.25f64.powi(l));
        }
        for k in 1..=64 {
            cuts.push(k as f64 / 64.0);
        }
        cuts.dedup_by(|a, b| *a <= *b);
        let mut s = 0.0;
        for p in cuts.windows(2) {
            let (a, b) = (p[0], p[1]);
            for (xi, wi) in x.iter().zip(&w) {
                let r = a + (b - a) * xi;
                let v = bessel_j(entry.nu, entry.zero * r)?;
                s += (b - a) * wi * r * v * v;
            }
        }
        Ok(DiskMode { entry, c: 1.0 / (TAU * s).sqrt() })
    }

    /// Radial profile c J_nu(z r).
    pub fn radial(&self, r: f64) -> f64 {
        self.c * bessel_j(self.entry.nu, self.entry.zero * r).unwrap_or(0.0)
    }

    pub fn radial_prime(&self, r: f64) -> f64 {
        self.c * self.entry.zero * bessel_j_prime(self.entry.nu, self.entry.zero * r).unwrap_or(0.0)
    }

    pub fn eval(&self, x: Point) -> Complex64 {
        let r = x[0].hypot(x[1]);
        let t = x[1].atan2(x[0]);
        Complex64::from_polar(1.0, self.entry.j as f64 * t) * self.radial(r)
    }

    /// Leading coefficient of the pole expansion: c sqrt(2pi) (z/2)^nu / Gamma(1+nu).
    pub fn beta(&self) -> f64 {
        let nu = self.entry.nu;
        self.c * TAU.sqrt() * (0.5 * self.entry.zero).powf(nu) / gamma(1.0 + nu)
    }
}

pub fn disk_eigenfunction(entry: &DiskEntry, x: Point) -> Result<Complex64> {
    if x[0].hypot(x[1]) > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("point {x:?} lies outside the unit disk")));
    }
    Ok(DiskMode::new(*entry)?.eval(x))
}
