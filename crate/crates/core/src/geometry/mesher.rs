use std::collections::{HashMap, VecDeque};

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{dist, norm, orient, point_triangle_distance, sub, triangle_diameter, Domain, Mesh, Point};
use crate::error::{Error, Result};

/// Everything needed to rebuild a mesh for a different pole.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    pub domain: Domain,
    pub h_max: f64,
    /// beta >= 1; 1 means no grading.
    pub grading_exponent: f64,
    /// Lower bound on the relative distance entering the size law.
    pub floor: f64,
    /// Additional points that receive a vertex and the same grading as the pole.
    pub extra_centers: Vec<Point>,
}

impl MeshParams {
    pub fn new(domain: Domain, h_max: f64, grading_exponent: f64) -> MeshParams {
        MeshParams { domain, h_max, grading_exponent, floor: 1e-6, extra_centers: Vec::new() }
    }
}

/// Default grading exponent 2/min(alpha, 1-alpha) clamped to [2, 8].
pub fn default_grading(alpha: f64) -> f64 {
    (2.0 / alpha.min(1.0 - alpha)).clamp(2.0, 8.0)
}

pub fn mesh_domain(domain: &Domain, pole: Point, h_max: f64, grading_exponent: f64) -> Result<Mesh> {
    mesh_domain_with(&MeshParams::new(domain.clone(), h_max, grading_exponent), pole)
}

fn check_pole(domain: &Domain, pole: Point, h_max: f64) -> Result<()> {
    if !domain.contains(&pole) {
        return Err(Error::PoleOutside(pole));
    }
    let d = domain.boundary_distance(pole);
    if d < h_max {
        return Err(Error::PoleNearBoundary { pole, dist: d, h_max });
    }
    Ok(())
}

pub fn mesh_domain_with(params: &MeshParams, pole: Point) -> Result<Mesh> {
    let h = params.h_max;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("h_max must be positive, got {h}")));
    }
    if !(params.grading_exponent >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "grading exponent must be >= 1, got {}",
            params.grading_exponent
        )));
    }
    let domain = &params.domain;
    check_pole(domain, pole, h)?;
    let mut centers = vec![pole];
    for &c in &params.extra_centers {
        if !domain.contains(&c) || domain.boundary_distance(c) < h {
            return Err(Error::InvalidInput(format!("grading center {c:?} too close to boundary")));
        }
        if centers.iter().all(|&q| dist(q, c) > 0.0) {
            centers.push(c);
        }
    }

    let mut pts: Vec<Point> = Vec::new();
    let nb = domain.boundary.len();
    for i in 0..nb {
        let a = domain.boundary[i];
        let b = domain.boundary[(i + 1) % nb];
        let n = (dist(a, b) / h).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let n_bpts = pts.len();
    pts.extend(centers.iter().copied());

    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &domain.boundary {
        xmin = xmin.min(p[0]);
        xmax = xmax.max(p[0]);
        ymin = ymin.min(p[1]);
        ymax = ymax.max(p[1]);
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let j0 = ((ymin - pole[1]) / dy).floor() as i64 - 1;
    let j1 = ((ymax - pole[1]) / dy).ceil() as i64 + 1;
    for j in j0..=j1 {
        let y = pole[1] + j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        let i0 = ((xmin - pole[0]) / h).floor() as i64 - 1;
        let i1 = ((xmax - pole[0]) / h).ceil() as i64 + 1;
        for i in i0..=i1 {
            let p = [pole[0] + (i as f64 + shift) * h, y];
            if !domain.contains(&p) || domain.boundary_distance(p) < 0.55 * h {
                continue;
            }
            if centers.iter().any(|&c| dist(c, p) < 0.55 * h) {
                continue;
            }
            pts.push(p);
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(pts.len());
    for p in &pts {
        let hd = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::InvalidInput(format!("triangulation insert failed: {e:?}")))?;
        handles.push(hd);
    }
    for i in 0..n_bpts {
        let a = handles[i];
        let b = handles[(i + 1) % n_bpts];
        if cdt.can_add_constraint(a, b) {
            cdt.add_constraint(a, b);
        }
    }
    // Map spade vertex indices back to our point indices.
    let mut spade_to_ours = vec![usize::MAX; cdt.num_vertices()];
    for (i, hd) in handles.iter().enumerate() {
        if spade_to_ours[hd.index()] == usize::MAX {
            spade_to_ours[hd.index()] = i;
        }
    }
    let mut tris: Vec<[usize; 3]> = Vec::new();
    for f in cdt.inner_faces() {
        let v = f.vertices();
        let ids = [
            spade_to_ours[v[0].fix().index()],
            spade_to_ours[v[1].fix().index()],
            spade_to_ours[v[2].fix().index()],
        ];
        let p = [pts[ids[0]], pts[ids[1]], pts[ids[2]]];
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        if !domain.contains(&c) {
            continue;
        }
        if orient(p[0], p[1], p[2]) > 0.0 {
            tris.push(ids);
        } else {
            tris.push([ids[0], ids[2], ids[1]]);
        }
    }
    tris.sort_unstable();

    let mut is_bnd = vec![false; pts.len()];
    is_bnd[..n_bpts].iter_mut().for_each(|b| *b = true);
    let diam = domain.diameter();
    let gamma = 1.0 - 1.0 / params.grading_exponent;
    let target = |p: [Point; 3]| {
        let d = centers
            .iter()
            .map(|&c| point_triangle_distance(c, p))
            .fold(f64::INFINITY, f64::min);
        h * (d / diam).max(params.floor).powf(gamma)
    };
    let mut r = Refiner::new(pts, tris, is_bnd);
    r.refine(target);

    let Refiner { verts, tris, is_bnd, .. } = r;
    let used = {
        let mut u = vec![false; verts.len()];
        tris.iter().flatten().for_each(|&v| u[v] = true);
        u
    };
    let mut remap = vec![usize::MAX; verts.len()];
    let mut vertices = Vec::new();
    for (i, p) in verts.iter().enumerate() {
        if used[i] {
            remap[i] = vertices.len();
            vertices.push(*p);
        }
    }
    let triangles: Vec<[usize; 3]> =
        tris.iter().map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]]).collect();
    let boundary_vertices: Vec<usize> =
        (0..verts.len()).filter(|&i| used[i] && is_bnd[i]).map(|i| remap[i]).collect();
    let pole_vertex = remap[n_bpts];
    if pole_vertex == usize::MAX || vertices[pole_vertex] != pole {
        return Err(Error::InvalidInput("pole vertex lost during triangulation".into()));
    }
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_vertices,
        pole_vertex,
        grading_exponent: params.grading_exponent,
        h_max: h,
        params: Some(MeshParams { extra_centers: centers[1..].to_vec(), ..params.clone() }),
    };
    mesh.validate()?;
    Ok(mesh)
}

const NONE: usize = usize::MAX;

struct Refiner {
    verts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    is_bnd: Vec<bool>,
    edges: HashMap<(usize, usize), [usize; 2]>,
}

#[inline]
fn ekey(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Refiner {
    fn new(verts: Vec<Point>, tris: Vec<[usize; 3]>, is_bnd: Vec<bool>) -> Refiner {
        let mut edges: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let e = edges.entry(ekey(tri[k], tri[(k + 1) % 3])).or_insert([NONE, NONE]);
                if e[0] == NONE {
                    e[0] = t;
                } else {
                    e[1] = t;
                }
            }
        }
        Refiner { verts, tris, is_bnd, edges }
    }

    fn points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.tris[t];
        [self.verts[a], self.verts[b], self.verts[c]]
    }

    /// Total order on edges: squared length, then vertex ids.
    fn edge_rank(&self, a: usize, b: usize) -> (f64, usize, usize) {
        let (i, j) = ekey(a, b);
        let d = sub(self.verts[j], self.verts[i]);
        (d[0] * d[0] + d[1] * d[1], i, j)
    }

    fn longest(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t];
        let mut best = (tri[0], tri[1]);
        let mut rank = self.edge_rank(tri[0], tri[1]);
        for k in 1..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let r = self.edge_rank(a, b);
            if r.partial_cmp(&rank) == Some(std::cmp::Ordering::Greater) {
                rank = r;
                best = (a, b);
            }
        }
        ekey(best.0, best.1)
    }

    fn neighbor(&self, t: usize, e: (usize, usize)) -> usize {
        let s = self.edges[&e];
        if s[0] == t {
            s[1]
        } else {
            s[0]
        }
    }

    fn refine(&mut self, target: impl Fn([Point; 3]) -> f64) {
        let mut queue: VecDeque<usize> = (0..self.tris.len()).collect();
        while let Some(t) = queue.pop_front() {
            loop {
                let p = self.points(t);
                if triangle_diameter(p) <= target(p) {
                    break;
                }
                let first_new = self.tris.len();
                self.bisect_lepp(t);
                queue.extend(first_new..self.tris.len());
            }
        }
    }

    fn bisect_lepp(&mut self, t0: usize) {
        let mut stack = vec![t0];
        while let Some(&t) = stack.last() {
            let e = self.longest(t);
            let n = self.neighbor(t, e);
            if n == NONE || self.longest(n) == e {
                self.split_edge(e);
                stack.pop();
            } else {
                stack.push(n);
            }
        }
    }

    fn replace(&mut self, e: (usize, usize), old: usize, new: usize) {
        let s = self.edges.get_mut(&e).expect("edge present");
        if s[0] == old {
            s[0] = new;
        } else {
            s[1] = new;
        }
    }

    fn add(&mut self, e: (usize, usize), t: usize) {
        let s = self.edges.entry(e).or_insert([NONE, NONE]);
        if s[0] == NONE {
            s[0] = t;
        } else {
            s[1] = t;
        }
    }

    fn split_edge(&mut self, e: (usize, usize)) {
        let owners = self.edges.remove(&e).expect("edge present");
        let (i, j) = e;
        let boundary = owners[1] == NONE;
        let m = self.verts.len();
        let (pi, pj) = (self.verts[i], self.verts[j]);
        self.verts.push([0.5 * (pi[0] + pj[0]), 0.5 * (pi[1] + pj[1])]);
        self.is_bnd.push(boundary && self.is_bnd[i] && self.is_bnd[j]);
        for &t in owners.iter().filter(|&&t| t != NONE) {
            let tri = self.tris[t];
            let k = (0..3)
                .find(|&k| ekey(tri[k], tri[(k + 1) % 3]) == e)
                .expect("edge belongs to triangle");
            let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let nt = self.tris.len();
            self.tris[t] = [a, m, c];
            self.tris.push([m, b, c]);
            self.replace(ekey(b, c), t, nt);
            self.add(ekey(a, m), t);
            self.add(ekey(m, b), nt);
            self.add(ekey(m, c), t);
            self.add(ekey(m, c), nt);
        }
    }
}

fn smooth_cutoff(s: f64, r0: f64, r1: f64) -> f64 {
    if s <= r0 {
        1.0
    } else if s >= r1 {
        0.0
    } else {
        let x = (s - r0) / (r1 - r0);
        1.0 - x * x * (3.0 - 2.0 * x)
    }
}

/// Move the pole of `mesh` to `new_pole`.
///
/// Small displacements keep the topology: vertices are translated rigidly
/// near the old pole and blended smoothly back to rest well before the
/// boundary. Larger moves rebuild the mesh from its generation parameters.
pub fn remesh_for_pole(mesh: &Mesh, new_pole: Point) -> Result<Mesh> {
    let old = mesh.pole();
    if new_pole == old {
        return Ok(mesh.clone());
    }
    let inside = match &mesh.params {
        Some(p) => p.domain.contains(&new_pole),
        None => {
            let mut inside = false;
            for e in mesh.boundary_edges() {
                let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
                if (a[1] > new_pole[1]) != (b[1] > new_pole[1]) {
                    let x = a[0] + (new_pole[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                    if new_pole[0] < x {
                        inside = !inside;
                    }
                }
            }
            inside
        }
    };
    if !inside {
        return Err(Error::PoleOutside(new_pole));
    }
    let dnew = mesh.boundary_distance(new_pole);
    if dnew < mesh.h_max {
        return Err(Error::PoleNearBoundary { pole: new_pole, dist: dnew, h_max: mesh.h_max });
    }
    let rho = mesh.boundary_distance(old);
    let delta = sub(new_pole, old);
    let (r0, r1) = (0.3 * rho, 0.8 * rho);
    if norm(delta) * 1.5 / (r1 - r0) > 0.5 {
        let params = mesh
            .params
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("pole displacement too large for an imported mesh".into()))?;
        return mesh_domain_with(params, new_pole);
    }
    let boundary = mesh.is_boundary();
    let mut out = mesh.clone();
    for (i, v) in out.vertices.iter_mut().enumerate() {
        if boundary[i] {
            continue;
        }
        let c = smooth_cutoff(dist(*v, old), r0, r1);
        if c > 0.0 {
            *v = [v[0] + c * delta[0], v[1] + c * delta[1]];
        }
    }
    out.vertices[out.pole_vertex] = new_pole;
    out.validate()?;
    Ok(out)
}
