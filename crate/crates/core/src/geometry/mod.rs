//! Planar domains and graded conforming triangulations.

mod io;
mod mesher;

pub use io::{read_mesh, write_mesh};
pub use mesher::{default_grading, mesh_domain, mesh_domain_with, remesh_for_pole, MeshParams};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

pub fn triangle_area(p: [Point; 3]) -> f64 {
    0.5 * orient(p[0], p[1], p[2])
}

pub fn triangle_diameter(p: [Point; 3]) -> f64 {
    dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
}

/// Inradius divided by diameter; 1/(2*sqrt(3)) for an equilateral triangle.
pub fn triangle_quality(p: [Point; 3]) -> f64 {
    let (a, b, c) = (dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1]));
    let area = triangle_area(p).abs();
    let inr = 2.0 * area / (a + b + c);
    inr / a.max(b).max(c)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    if l2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Distance from `p` to the closed triangle `t` (zero inside).
pub fn point_triangle_distance(p: Point, t: [Point; 3]) -> f64 {
    let s0 = orient(t[0], t[1], p);
    let s1 = orient(t[1], t[2], p);
    let s2 = orient(t[2], t[0], p);
    if s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0 {
        return 0.0;
    }
    point_segment_distance(p, t[0], t[1])
        .min(point_segment_distance(p, t[1], t[2]))
        .min(point_segment_distance(p, t[2], t[0]))
}

/// A simply connected polygonal domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    /// Counterclockwise vertices; the closing edge is implicit.
    pub boundary: Vec<Point>,
    pub contains_origin: bool,
}

impl Domain {
    /// Build a domain from a polygon, reorienting it counterclockwise.
    pub fn from_polygon(mut boundary: Vec<Point>) -> Result<Domain> {
        if boundary.len() < 3 {
            return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
        }
        if boundary.first() == boundary.last() {
            boundary.pop();
        }
        let n = boundary.len();
        let mut area2 = 0.0;
        for i in 0..n {
            area2 += cross(boundary[i], boundary[(i + 1) % n]);
        }
        if area2 == 0.0 {
            return Err(Error::InvalidInput("polygon has zero area".into()));
        }
        if area2 < 0.0 {
            boundary.reverse();
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (boundary[i], boundary[(i + 1) % n]);
                let (c, d) = (boundary[j], boundary[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidInput(format!(
                        "polygon edges {i} and {j} intersect"
                    )));
                }
            }
        }
        let mut d = Domain { boundary, contains_origin: false };
        d.contains_origin = d.contains(&[0.0, 0.0]) && d.boundary_distance([0.0, 0.0]) > 0.0;
        Ok(d)
    }

    /// Scale about the origin so that the closed disk of radius `r` fits inside.
    pub fn rescaled_to_contain_disk(&self, r: f64) -> Result<Domain> {
        if !self.contains_origin {
            return Err(Error::InvalidInput("domain does not contain the origin".into()));
        }
        let d = self.boundary_distance([0.0, 0.0]);
        let s = r / d * (1.0 + 1e-12);
        Domain::from_polygon(self.boundary.iter().map(|p| [p[0] * s, p[1] * s]).collect())
    }

    pub fn contains(&self, p: &Point) -> bool {
        let n = self.boundary.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.boundary[i];
            let b = self.boundary[(i + 1) % n];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| point_segment_distance(p, self.boundary[i], self.boundary[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.boundary {
            for b in &self.boundary {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    pub fn area(&self) -> f64 {
        let n = self.boundary.len();
        0.5 * (0..n)
            .map(|i| cross(self.boundary[i], self.boundary[(i + 1) % n]))
            .sum::<f64>()
    }
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Regular polygon with `n_boundary` vertices inscribed in the circle of
/// radius `radius` about the origin.
pub fn make_disk_domain(radius: f64, n_boundary: usize) -> Result<Domain> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if n_boundary < 16 {
        return Err(Error::InvalidInput(format!(
            "n_boundary must be at least 16, got {n_boundary}"
        )));
    }
    let boundary = (0..n_boundary)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_boundary as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    Ok(Domain { boundary, contains_origin: true })
}

/// Conforming triangulation with a vertex at the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted indices of the vertices lying on the boundary polyline.
    pub boundary_vertices: Vec<usize>,
    pub pole_vertex: usize,
    pub grading_exponent: f64,
    pub h_max: f64,
    /// Generation data, present for meshes built by [`mesh_domain`].
    pub params: Option<MeshParams>,
}

impl Mesh {
    pub fn pole(&self) -> Point {
        self.vertices[self.pole_vertex]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut f = vec![false; self.vertices.len()];
        for &b in &self.boundary_vertices {
            f[b] = true;
        }
        f
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| triangle_quality(self.tri_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Edges with exactly one adjacent triangle.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut count: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.into_iter().filter(|(_, c)| *c == 1).map(|((a, b), _)| [a, b]).collect()
    }

    /// Distance from `p` to the mesh boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.boundary_edges()
            .iter()
            .map(|e| point_segment_distance(p, self.vertices[e[0]], self.vertices[e[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Check orientation and conformity; return the first offending element.
    pub fn validate(&self) -> Result<()> {
        let mut count: std::collections::HashMap<(usize, usize), usize> = Default::default();
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::DegenerateElement(i));
            }
            let p = self.tri_points(i);
            let d = triangle_diameter(p);
            if !(orient(p[0], p[1], p[2]) > 1e-14 * d * d) {
                return Err(Error::DegenerateElement(i));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if count.values().any(|&c| c > 2) {
            return Err(Error::InvalidInput("non-manifold edge".into()));
        }
        if self.pole_vertex >= self.vertices.len() {
            return Err(Error::InvalidInput("pole vertex out of range".into()));
        }
        Ok(())
    }
}
