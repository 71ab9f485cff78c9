//! Evaluation and integration of P1 nodal fields.

use num_complex::Complex64;

use crate::assembly::basis_gradients;
use crate::clip::{clip_disk, integrate_polygon};
use crate::gauge::PoleConfig;
use crate::geometry::{dist, point_triangle_distance, Mesh, Point};
use crate::locate::{barycentric, Locator};
use crate::par::{map_chunks, Execution};
use crate::quad::rules;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A complex P1 field on a mesh, with a point locator.
#[derive(Clone, Copy)]
pub struct Field<'a> {
    pub mesh: &'a Mesh,
    pub locator: &'a Locator,
    pub values: &'a [Complex64],
}

impl<'a> Field<'a> {
    pub fn new(mesh: &'a Mesh, locator: &'a Locator, values: &'a [Complex64]) -> Field<'a> {
        assert_eq!(mesh.n_vertices(), values.len());
        Field { mesh, locator, values }
    }

    #[inline]
    pub fn value_in(&self, t: usize, l: [f64; 3]) -> Complex64 {
        let tri = self.mesh.triangles[t];
        self.values[tri[0]] * l[0] + self.values[tri[1]] * l[1] + self.values[tri[2]] * l[2]
    }

    #[inline]
    pub fn grad_in(&self, t: usize) -> [Complex64; 2] {
        let g = basis_gradients(self.mesh.tri_points(t));
        let tri = self.mesh.triangles[t];
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for k in 0..3 {
            out[0] += self.values[tri[k]] * g[k][0];
            out[1] += self.values[tri[k]] * g[k][1];
        }
        out
    }

    /// Value at `x` inside triangle `t`.
    #[inline]
    pub fn value_at(&self, t: usize, x: Point) -> Complex64 {
        self.value_in(t, barycentric(self.mesh.tri_points(t), x))
    }

    /// (i grad + A) u at `x` inside triangle `t`; `x` must differ from the pole.
    #[inline]
    pub fn covariant_at(&self, t: usize, x: Point, cfg: &PoleConfig) -> [Complex64; 2] {
        let u = self.value_at(t, x);
        let g = self.grad_in(t);
        let a = cfg.potential(x);
        [I * g[0] + u * a[0], I * g[1] + u * a[1]]
    }

    pub fn eval(&self, x: Point) -> Option<Complex64> {
        self.locator.locate(self.mesh, x).map(|(t, l)| self.value_in(t, l))
    }
}

/// Diameter of the element containing `x`, if any.
pub fn local_diameter(mesh: &Mesh, locator: &Locator, x: Point) -> Option<f64> {
    locator
        .locate(mesh, x)
        .map(|(t, _)| crate::geometry::triangle_diameter(mesh.tri_points(t)))
}

/// Integrate `f(t, x)` over the intersection of the mesh with the disk of
/// radius `r` about `c`. Elements with a vertex at one of `apexes` use a
/// rule collapsed there.
pub fn integrate_disk<T, F>(
    mesh: &Mesh,
    locator: &Locator,
    c: Point,
    r: f64,
    apexes: &[Point],
    exec: Execution,
    f: F,
) -> T
where
    T: Default + Copy + Send + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: Fn(usize, Point) -> T + Sync + Send,
{
    let cands = locator.query_box([c[0] - r, c[1] - r, c[0] + r, c[1] + r]);
    let regular = &rules().regular;
    let parts = map_chunks(exec, cands.len(), 256, |range| {
        let mut acc = T::default();
        for &t in &cands[range] {
            let p = mesh.tri_points(t);
            let dmax = p.iter().map(|q| dist(*q, c)).fold(0.0, f64::max);
            let poly = if dmax <= r {
                p.to_vec()
            } else {
                if point_triangle_distance(c, p) >= r {
                    continue;
                }
                clip_disk(&p, c, r)
            };
            acc += integrate_polygon(&poly, apexes, regular, |x| f(t, x));
        }
        acc
    });
    let mut total = T::default();
    for p in parts {
        total += p;
    }
    total
}

/// Integrate `f(t, x)` over the whole mesh.
pub fn integrate_mesh<T, F>(mesh: &Mesh, apexes: &[Point], exec: Execution, f: F) -> T
where
    T: Default + Copy + Send + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: Fn(usize, Point) -> T + Sync + Send,
{
    let regular = &rules().regular;
    let parts = map_chunks(exec, mesh.triangles.len(), 256, |range| {
        let mut acc = T::default();
        for t in range {
            let p = mesh.tri_points(t);
            acc += integrate_polygon(&p, apexes, regular, |x| f(t, x));
        }
        acc
    });
    let mut total = T::default();
    for p in parts {
        total += p;
    }
    total
}

/// Energy-type integrals of a field over the disk D_r(c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskIntegrals {
    /// int |(i grad + A) u|^2
    pub energy: f64,
    /// int |u|^2
    pub mass: f64,
    /// int |u|^2 / |x - a|^2
    pub hardy: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Triple(f64, f64, f64);

impl std::ops::AddAssign for Triple {
    fn add_assign(&mut self, o: Triple) {
        self.0 += o.0;
        self.1 += o.1;
        self.2 += o.2;
    }
}

impl std::ops::Mul<f64> for Triple {
    type Output = Triple;
    fn mul(self, s: f64) -> Triple {
        Triple(self.0 * s, self.1 * s, self.2 * s)
    }
}

pub fn disk_integrals(field: &Field, cfg: &PoleConfig, c: Point, r: f64, exec: Execution) -> DiskIntegrals {
    let a = cfg.pole;
    let t: Triple = integrate_disk(field.mesh, field.locator, c, r, &[a], exec, |t, x| {
        let w = field.covariant_at(t, x, cfg);
        let u = field.value_at(t, x).norm_sqr();
        let d2 = (x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2);
        Triple(w[0].norm_sqr() + w[1].norm_sqr(), u, u / d2)
    });
    DiskIntegrals { energy: t.0, mass: t.1, hardy: t.2 }
}
