//! Quadrature over the common refinement of one or two meshes, optionally
//! restricted to a disk and split along the line through the origin and the
//! pole so that integrands with a gauge-phase jump stay smooth on each piece.

use crate::clip::{clip_convex, clip_disk, clip_halfplane, integrate_polygon};
use crate::geometry::{dist, point_triangle_distance, Mesh, Point};
use crate::locate::Locator;
use crate::par::{map_chunks, Execution};
use crate::quad::rules;

/// A quadrature point with the elements containing it.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub x: Point,
    /// Element of the primary mesh.
    pub ta: usize,
    /// Element of the secondary mesh (`usize::MAX` without one).
    pub tb: usize,
    /// +1 or -1 on the two sides of the split line, 0 for unsplit pieces.
    pub side: f64,
}

#[derive(Clone, Copy, Default)]
pub struct Region<'a> {
    pub other: Option<(&'a Mesh, &'a Locator)>,
    pub disk: Option<(Point, f64)>,
    /// Pole whose cut segment [0, a] splits pieces.
    pub cut: Option<Point>,
    pub apexes: &'a [Point],
}

fn bbox(p: &[Point]) -> [f64; 4] {
    let mut b = [f64::MAX, f64::MAX, f64::MIN, f64::MIN];
    for q in p {
        b[0] = b[0].min(q[0]);
        b[1] = b[1].min(q[1]);
        b[2] = b[2].max(q[0]);
        b[3] = b[3].max(q[1]);
    }
    b
}

pub fn integrate<T, F>(mesh: &Mesh, locator: &Locator, region: Region, exec: Execution, f: F) -> T
where
    T: Default + Copy + Send + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: Fn(&Sample) -> T + Sync + Send,
{
    let cands: Vec<usize> = match region.disk {
        Some((c, r)) => locator.query_box([c[0] - r, c[1] - r, c[0] + r, c[1] + r]),
        None => (0..mesh.triangles.len()).collect(),
    };
    let regular = &rules().regular;
    let cut = region.cut.filter(|a| *a != [0.0, 0.0]);
    let cut_box = cut.map(|a| {
        let e = 1e-12 * (1.0 + a[0].abs().max(a[1].abs()));
        [a[0].min(0.0) - e, a[1].min(0.0) - e, a[0].max(0.0) + e, a[1].max(0.0) + e]
    });
    let parts = map_chunks(exec, cands.len(), 128, |range| {
        let mut acc = T::default();
        let mut pieces: Vec<(Vec<Point>, usize)> = Vec::new();
        for &ta in &cands[range] {
            let pa = mesh.tri_points(ta);
            if let Some((c, r)) = region.disk {
                if point_triangle_distance(c, pa) >= r {
                    continue;
                }
            }
            pieces.clear();
            match region.other {
                Some((mb, lb)) => {
                    for tb in lb.query_box(bbox(&pa)) {
                        let poly = clip_convex(&pa, &mb.tri_points(tb));
                        if poly.len() >= 3 {
                            pieces.push((poly, tb));
                        }
                    }
                }
                None => pieces.push((pa.to_vec(), usize::MAX)),
            }
            for (poly, tb) in pieces.drain(..) {
                let poly = match region.disk {
                    Some((c, r)) if poly.iter().any(|q| dist(*q, c) > r) => clip_disk(&poly, c, r),
                    _ => poly,
                };
                if poly.len() < 3 {
                    continue;
                }
                let split = match (cut, cut_box) {
                    (Some(a), Some(cb)) => {
                        let b = bbox(&poly);
                        b[0] <= cb[2] && cb[0] <= b[2] && b[1] <= cb[3] && cb[1] <= b[3]
                            && crate::clip::polygon_area(&poly) > 0.0
                            && a != [0.0, 0.0]
                    }
                    _ => false,
                };
                if split {
                    let a = cut.unwrap();
                    let n = [-a[1], a[0]];
                    for side in [1.0, -1.0] {
                        let half = clip_halfplane(&poly, [side * n[0], side * n[1]], 0.0);
                        if half.len() >= 3 {
                            acc += integrate_polygon(&half, region.apexes, regular, |x| {
                                f(&Sample { x, ta, tb, side })
                            });
                        }
                    }
                } else {
                    acc += integrate_polygon(&poly, region.apexes, regular, |x| {
                        f(&Sample { x, ta, tb, side: 0.0 })
                    });
                }
            }
        }
        acc
    });
    let mut total = T::default();
    for p in parts {
        total += p;
    }
    total
}
