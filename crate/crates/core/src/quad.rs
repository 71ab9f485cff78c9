//! Gauss-Legendre and collapsed-coordinate triangle rules.

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// A rule on a triangle: barycentric points and weights summing to 1, so
/// that the integral is `area * sum(w * f)`.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<([f64; 3], f64)>,
}

impl TriRule {
    /// Conical-product rule exact for polynomials of degree `degree`,
    /// collapsed at vertex 0.
    pub fn conical(degree: usize) -> TriRule {
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        Self::product(&[(0.0, 1.0)], &x, &w, &x, &w)
    }

    /// Collapsed rule at vertex 0 with geometric refinement of the radial
    /// direction, for integrands behaving like powers of the distance to
    /// vertex 0.
    pub fn graded(degree: usize, levels: usize) -> TriRule {
        let n = (degree + 2).div_ceil(2);
        let (x, w) = gauss_legendre(n);
        let sigma: f64 = 0.15;
        let mut cuts = vec![0.0];
        for l in (0..levels).rev() {
            cuts.push(sigma.powi(l as i32 + 1));
        }
        cuts.push(1.0);
        let segs: Vec<(f64, f64)> = cuts.windows(2).map(|c| (c[0], c[1])).collect();
        Self::product(&segs, &x, &w, &x, &w)
    }

    fn product(segs: &[(f64, f64)], xu: &[f64], wu: &[f64], xw: &[f64], ww: &[f64]) -> TriRule {
        let mut points = Vec::new();
        for &(a, b) in segs {
            for (ui, wui) in xu.iter().zip(wu) {
                let u = a + (b - a) * ui;
                for (wi, wwi) in xw.iter().zip(ww) {
                    let xi = u * (1.0 - wi);
                    let eta = u * wi;
                    points.push(([1.0 - xi - eta, xi, eta], 2.0 * (b - a) * wui * wwi * u));
                }
            }
        }
        TriRule { points }
    }

    /// The same rule collapsed at local vertex `k` instead of vertex 0.
    pub fn rotated(&self, k: usize) -> TriRule {
        let points = self
            .points
            .iter()
            .map(|&(l, w)| {
                let mut r = [0.0; 3];
                for i in 0..3 {
                    r[(i + k) % 3] = l[i];
                }
                (r, w)
            })
            .collect();
        TriRule { points }
    }
}

/// Cached rules used throughout: regular degree 4, pole degree 6.
pub struct Rules {
    pub regular: TriRule,
    pub pole: [TriRule; 3],
    pub singular: [TriRule; 3],
}

pub fn rules() -> &'static Rules {
    static R: OnceLock<Rules> = OnceLock::new();
    R.get_or_init(|| {
        let pole = TriRule::conical(6);
        let singular = TriRule::graded(6, 6);
        Rules {
            regular: TriRule::conical(4),
            pole: [pole.rotated(0), pole.rotated(1), pole.rotated(2)],
            singular: [singular.rotated(0), singular.rotated(1), singular.rotated(2)],
        }
    })
}

/// Rule for a given order; order <= 4 uses the regular rule.
pub fn rule_for_order(order: usize) -> TriRule {
    TriRule::conical(order.max(1))
}
