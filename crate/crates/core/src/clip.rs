//! Convex polygon clipping and polygon quadrature.

use std::f64::consts::TAU;

use crate::geometry::{dist, orient, Point};
use crate::quad::{rules, TriRule};

pub type Polygon = Vec<Point>;

/// Keep the part of a convex polygon where `n . x >= c`.
pub fn clip_halfplane(poly: &[Point], n: [f64; 2], c: f64) -> Polygon {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let m = poly.len();
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        let fp = n[0] * p[0] + n[1] * p[1] - c;
        let fq = n[0] * q[0] + n[1] * q[1] - c;
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Intersection of two convex counterclockwise polygons.
pub fn clip_convex(subject: &[Point], clipper: &[Point]) -> Polygon {
    let mut out = subject.to_vec();
    let m = clipper.len();
    for i in 0..m {
        if out.len() < 3 {
            return Vec::new();
        }
        let a = clipper[i];
        let b = clipper[(i + 1) % m];
        let n = [-(b[1] - a[1]), b[0] - a[0]];
        out = clip_halfplane(&out, n, n[0] * a[0] + n[1] * a[1]);
    }
    if out.len() < 3 {
        Vec::new()
    } else {
        out
    }
}

pub fn polygon_area(p: &[Point]) -> f64 {
    let m = p.len();
    0.5 * (0..m).map(|i| p[i][0] * p[(i + 1) % m][1] - p[(i + 1) % m][0] * p[i][1]).sum::<f64>()
}

/// Number of segments in the polygonal disk used for clipping.
pub const DISK_SEGMENTS: usize = 4096;

/// Radius of the regular `n`-gon with the same area as the circle of radius `r`.
pub fn equal_area_radius(r: f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    r * (TAU / (n as f64 * h.sin())).sqrt()
}

/// Intersection of a convex polygon with the disk of radius `r` about `c`,
/// the disk represented by an equal-area regular polygon.
pub fn clip_disk(poly: &[Point], c: Point, r: f64) -> Polygon {
    let n = DISK_SEGMENTS;
    let rr = equal_area_radius(r, n);
    let h = TAU / n as f64;
    let inside = {
        let m = poly.len();
        (0..m).all(|i| orient(poly[i], poly[(i + 1) % m], c) >= 0.0)
    };
    let (k0, k1) = if inside {
        (0i64, n as i64)
    } else {
        let base = (poly[0][1] - c[1]).atan2(poly[0][0] - c[0]);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for p in &poly[1..] {
            let a = (p[1] - c[1]).atan2(p[0] - c[0]) - base;
            let a = a - TAU * ((a + std::f64::consts::PI) / TAU).floor();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        (((base + lo) / h).floor() as i64 - 1, ((base + hi) / h).ceil() as i64 + 1)
    };
    let mut out = poly.to_vec();
    for k in k0..k1 {
        if out.len() < 3 {
            return Vec::new();
        }
        let (t0, t1) = (k as f64 * h, (k + 1) as f64 * h);
        let a = [c[0] + rr * t0.cos(), c[1] + rr * t0.sin()];
        let b = [c[0] + rr * t1.cos(), c[1] + rr * t1.sin()];
        let nrm = [-(b[1] - a[1]), b[0] - a[0]];
        out = clip_halfplane(&out, nrm, nrm[0] * a[0] + nrm[1] * a[1]);
    }
    if out.len() < 3 {
        Vec::new()
    } else {
        out
    }
}

/// Integrate over a convex polygon by fan triangulation.
///
/// If a polygon vertex coincides with one of `apexes`, the fan starts there
/// and uses the graded rule collapsed at that vertex; otherwise `regular`.
pub fn integrate_polygon<T, F>(poly: &[Point], apexes: &[Point], regular: &TriRule, mut f: F) -> T
where
    T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: FnMut(Point) -> T,
{
    let mut acc = T::default();
    let m = poly.len();
    if m < 3 {
        return acc;
    }
    let scale = dist(poly[0], poly[1]).max(dist(poly[1], poly[2]));
    let apex = poly
        .iter()
        .position(|p| apexes.iter().any(|a| dist(*p, *a) <= 1e-12 * scale.max(1e-300)));
    let (start, rule) = match apex {
        Some(k) => (k, &rules().singular[0]),
        None => (0, regular),
    };
    let p0 = poly[start];
    for i in 1..m - 1 {
        let p1 = poly[(start + i) % m];
        let p2 = poly[(start + i + 1) % m];
        let area = 0.5 * orient(p0, p1, p2);
        if area <= 0.0 {
            continue;
        }
        for &(l, w) in &rule.points {
            let x = [
                l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
                l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
            ];
            acc += f(x) * (w * area);
        }
    }
    acc
}
