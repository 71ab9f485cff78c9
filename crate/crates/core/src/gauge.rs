//! Aharonov-Bohm potential, branch-cut angle functions, gauge phases and
//! homogeneous profiles.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{dist, point_segment_distance, Point};

const CUT_EPS: f64 = 1e-13;

/// Circulation and pole position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleConfig {
    pub alpha: f64,
    pub pole: Point,
    /// Polar angle of the pole in [0, 2pi); 0 when the pole is the origin.
    pub direction_angle: f64,
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1e-12 && alpha < 1.0 - 1e-12) || (alpha - 0.5).abs() <= 1e-12 {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1) minus {{1/2}}, got {alpha}")));
    }
    Ok(())
}

fn branch(t: f64, lo: f64) -> f64 {
    let s = lo + (t - lo).rem_euclid(TAU);
    if s >= lo + TAU - CUT_EPS {
        lo
    } else {
        s
    }
}

impl PoleConfig {
    pub fn new(alpha: f64, pole: Point) -> Result<PoleConfig> {
        check_alpha(alpha)?;
        if !pole[0].is_finite() || !pole[1].is_finite() {
            return Err(Error::InvalidInput("pole must be finite".into()));
        }
        let direction_angle = if pole == [0.0, 0.0] {
            0.0
        } else {
            pole[1].atan2(pole[0]).rem_euclid(TAU)
        };
        Ok(PoleConfig { alpha, pole, direction_angle })
    }

    pub fn is_centered(&self) -> bool {
        self.pole == [0.0, 0.0]
    }

    /// Potential without the singularity check; callers guarantee `x != pole`.
    #[inline]
    pub fn potential(&self, x: Point) -> [f64; 2] {
        let dx = x[0] - self.pole[0];
        let dy = x[1] - self.pole[1];
        let s = self.alpha / (dx * dx + dy * dy);
        [-dy * s, dx * s]
    }

    pub fn vector_potential(&self, x: Point) -> Result<[f64; 2]> {
        if x == self.pole {
            return Err(Error::InvalidInput(format!("potential is singular at the pole {x:?}")));
        }
        Ok(self.potential(x))
    }

    /// Angle of `x - a` in [theta, theta + 2pi).
    pub fn theta_pole(&self, x: Point) -> Result<f64> {
        if x == self.pole {
            return Err(Error::InvalidInput("angle undefined at the pole".into()));
        }
        let t = (x[1] - self.pole[1]).atan2(x[0] - self.pole[0]);
        Ok(branch(t, self.direction_angle))
    }

    /// Angle of `x` about the origin in [theta, theta + 2pi).
    pub fn theta_origin_cut(&self, x: Point) -> Result<f64> {
        if x == [0.0, 0.0] {
            return Err(Error::InvalidInput("angle undefined at the origin".into()));
        }
        Ok(branch(x[1].atan2(x[0]), self.direction_angle))
    }

    /// Whether `x` lies on the closed segment from 0 to the pole.
    pub fn on_cut(&self, x: Point) -> bool {
        let scale = 1.0f64.max(self.pole[0].abs().max(self.pole[1].abs()));
        point_segment_distance(x, [0.0, 0.0], self.pole) <= CUT_EPS * scale
    }

    /// e^{i alpha (theta_0^a - theta_a)}; identically 1 for a centered pole.
    pub fn gauge_phase(&self, x: Point) -> Result<Complex64> {
        if self.is_centered() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        if self.on_cut(x) {
            return Err(Error::OnCut(x));
        }
        Ok(self.phase_unchecked(x))
    }

    /// Gauge phase without the cut check, for quadrature points known to be
    /// off the segment.
    #[inline]
    pub fn phase_unchecked(&self, x: Point) -> Complex64 {
        if self.is_centered() {
            return Complex64::new(1.0, 0.0);
        }
        let lo = self.direction_angle;
        let t0 = branch(x[1].atan2(x[0]), lo);
        let ta = branch((x[1] - self.pole[1]).atan2(x[0] - self.pole[0]), lo);
        Complex64::from_polar(1.0, self.alpha * (t0 - ta))
    }

    /// Gauge phase for a point known to lie on a given side of the line
    /// through 0 and the pole: `side > 0` is the counterclockwise side.
    /// Points on the cut take the one-sided limit.
    pub fn phase_on_side(&self, x: Point, side: f64) -> Complex64 {
        if self.is_centered() {
            return Complex64::new(1.0, 0.0);
        }
        if !self.on_cut(x) {
            return self.phase_unchecked(x);
        }
        let n = [-self.pole[1], self.pole[0]];
        let l = dist(self.pole, [0.0, 0.0]);
        let eps = 1e-9 * l;
        let y = [x[0] + side.signum() * eps * n[0] / l, x[1] + side.signum() * eps * n[1] / l];
        self.phase_unchecked(y)
    }
}

/// r^{|alpha-k|} e^{ikt} / sqrt(2 pi).
pub fn psi_profile(alpha: f64, k: i32, x: Point) -> Complex64 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let nu = (alpha - k as f64).abs();
    let t = x[1].atan2(x[0]);
    Complex64::from_polar(r.powf(nu) / TAU.sqrt(), k as f64 * t)
}

/// (i grad + A_0) psi_k at `x != 0`.
pub fn psi_covariant_gradient(alpha: f64, k: i32, x: Point) -> [Complex64; 2] {
    let r = x[0].hypot(x[1]);
    let nu = (alpha - k as f64).abs();
    let psi = psi_profile(alpha, k, x);
    let (c, s) = (x[0] / r, x[1] / r);
    let radial = Complex64::new(0.0, nu) * psi / r;
    let tang = psi * ((alpha - k as f64) / r);
    [radial * c - tang * s, radial * s + tang * c]
}

/// Degree of homogeneity |alpha - k|.
pub fn order(alpha: f64, k: i32) -> f64 {
    (alpha - k as f64).abs()
}
