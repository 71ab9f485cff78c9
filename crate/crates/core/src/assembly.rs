//! P1 assembly of the magnetic stiffness and mass forms.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::PoleConfig;
use crate::geometry::{triangle_area, Mesh, Point};
use crate::par::{map_range, Execution};
use crate::quad::{rule_for_order, rules, TriRule};
use crate::sparse::Csr;

pub const NO_DOF: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub stiffness: Csr<Complex64>,
    pub mass: Csr<f64>,
    /// Vertex id of each free degree of freedom.
    pub free_dofs: Vec<usize>,
    /// Free index of each vertex, or [`NO_DOF`].
    pub dof_of_vertex: Vec<usize>,
    pub quadrature_order: usize,
}

impl AssembledSystem {
    /// Wrap given matrices; every index is a free degree of freedom.
    pub fn from_matrices(stiffness: Csr<Complex64>, mass: Csr<f64>) -> Result<AssembledSystem> {
        if stiffness.n != mass.n {
            return Err(Error::Dimension(format!("K is {0}x{0}, M is {1}x{1}", stiffness.n, mass.n)));
        }
        let n = stiffness.n;
        Ok(AssembledSystem {
            stiffness,
            mass,
            free_dofs: (0..n).collect(),
            dof_of_vertex: (0..n).collect(),
            quadrature_order: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }

    /// Nodal vector over all vertices (zero at constrained ones).
    pub fn expand(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dof_of_vertex.len()];
        for (k, &v) in self.free_dofs.iter().enumerate() {
            out[v] = u[k];
        }
        out
    }

    /// Restriction of a nodal vector to the free degrees of freedom.
    pub fn restrict(&self, nodal: &[Complex64]) -> Vec<Complex64> {
        self.free_dofs.iter().map(|&v| nodal[v]).collect()
    }

    /// Write `i j re im` lines for the stiffness matrix.
    pub fn dump_stiffness<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, j, v) in self.stiffness.triplets() {
            writeln!(w, "{i} {j} {:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Write `i j re im` lines for the mass matrix.
    pub fn dump_mass<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, j, v) in self.mass.triplets() {
            writeln!(w, "{i} {j} {:.16e} {:.16e}", v, 0.0)?;
        }
        Ok(())
    }
}

/// Gradients of the barycentric basis functions on a triangle.
pub fn basis_gradients(p: [Point; 3]) -> [[f64; 2]; 3] {
    let d = crate::geometry::orient(p[0], p[1], p[2]);
    [
        [(p[1][1] - p[2][1]) / d, (p[2][0] - p[1][0]) / d],
        [(p[2][1] - p[0][1]) / d, (p[0][0] - p[2][0]) / d],
        [(p[0][1] - p[1][1]) / d, (p[1][0] - p[0][0]) / d],
    ]
}

pub fn barycentric_point(p: [Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Local position of the pole vertex in triangle `t`, if present.
pub fn pole_slot(mesh: &Mesh, t: usize) -> Option<usize> {
    mesh.triangles[t].iter().position(|&v| v == mesh.pole_vertex)
}

/// Local 3x3 stiffness entries `a(phi_j, phi_i)` stored as `k[i][j]`.
pub fn local_stiffness(p: [Point; 3], cfg: &PoleConfig, rule: &TriRule) -> [[Complex64; 3]; 3] {
    let g = basis_gradients(p);
    let area = triangle_area(p);
    let mut k = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j].re = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    for &(l, w) in &rule.points {
        let x = barycentric_point(p, l);
        let a = cfg.potential(x);
        let a2 = a[0] * a[0] + a[1] * a[1];
        let ga = [g[0][0] * a[0] + g[0][1] * a[1], g[1][0] * a[0] + g[1][1] * a[1], g[2][0] * a[0] + g[2][1] * a[1]];
        let wa = w * area;
        for i in 0..3 {
            for j in 0..3 {
                k[i][j].re += wa * a2 * l[i] * l[j];
                k[i][j].im += wa * (l[i] * ga[j] - l[j] * ga[i]);
            }
        }
    }
    k
}

/// Exact P1 mass matrix.
pub fn local_mass(p: [Point; 3]) -> [[f64; 3]; 3] {
    let a = triangle_area(p) / 12.0;
    let mut m = [[a; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * a;
    }
    m
}

/// Assemble with boundary and pole degrees of freedom eliminated.
pub fn assemble(mesh: &Mesh, cfg: &PoleConfig, quadrature_order: usize, exec: Execution) -> Result<AssembledSystem> {
    let nv = mesh.n_vertices();
    let mut dof_of_vertex = vec![0usize; nv];
    for &b in &mesh.boundary_vertices {
        dof_of_vertex[b] = NO_DOF;
    }
    dof_of_vertex[mesh.pole_vertex] = NO_DOF;
    let mut free_dofs = Vec::new();
    for (v, d) in dof_of_vertex.iter_mut().enumerate() {
        if *d != NO_DOF {
            *d = free_dofs.len();
            free_dofs.push(v);
        }
    }
    let (stiffness, mass) = assemble_on(mesh, cfg, quadrature_order, &dof_of_vertex, free_dofs.len(), exec)?;
    Ok(AssembledSystem { stiffness, mass, free_dofs, dof_of_vertex, quadrature_order })
}

/// Stiffness and mass over all vertices, without eliminations.
pub fn assemble_all(mesh: &Mesh, cfg: &PoleConfig, quadrature_order: usize, exec: Execution) -> Result<(Csr<Complex64>, Csr<f64>)> {
    let ids: Vec<usize> = (0..mesh.n_vertices()).collect();
    assemble_on(mesh, cfg, quadrature_order, &ids, ids.len(), exec)
}

fn assemble_on(
    mesh: &Mesh,
    cfg: &PoleConfig,
    quadrature_order: usize,
    dof_of_vertex: &[usize],
    n: usize,
    exec: Execution,
) -> Result<(Csr<Complex64>, Csr<f64>)> {
    if quadrature_order < 4 {
        return Err(Error::InvalidInput(format!("quadrature order must be >= 4, got {quadrature_order}")));
    }
    if mesh.pole() != cfg.pole {
        return Err(Error::InvalidInput(format!(
            "mesh pole {:?} does not match configured pole {:?}",
            mesh.pole(),
            cfg.pole
        )));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(9 * mesh.triangles.len());
    for t in &mesh.triangles {
        for &a in t {
            for &b in t {
                let (da, db) = (dof_of_vertex[a], dof_of_vertex[b]);
                if da != NO_DOF && db != NO_DOF {
                    pairs.push((da, db));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut stiffness: Csr<Complex64> = Csr::from_pattern(n, &pairs);
    let mut mass: Csr<f64> = Csr::from_pattern(n, &pairs);
    drop(pairs);

    let regular = rule_for_order(quadrature_order);
    let pole_order = quadrature_order.max(6);
    let pole_rules: Vec<TriRule> = if pole_order == 6 {
        rules().pole.to_vec()
    } else {
        let r = TriRule::conical(pole_order);
        (0..3).map(|k| r.rotated(k)).collect()
    };
    let locals = map_range(exec, mesh.triangles.len(), |t| {
        let p = mesh.tri_points(t);
        let rule = match pole_slot(mesh, t) {
            Some(k) => &pole_rules[k],
            None => &regular,
        };
        (local_stiffness(p, cfg, rule), local_mass(p))
    });
    for (t, (kl, ml)) in locals.iter().enumerate() {
        let tri = mesh.triangles[t];
        for i in 0..3 {
            let di = dof_of_vertex[tri[i]];
            if di == NO_DOF {
                continue;
            }
            for j in 0..3 {
                let dj = dof_of_vertex[tri[j]];
                if dj == NO_DOF {
                    continue;
                }
                let pos = stiffness.position(di, dj).expect("pattern covers element");
                stiffness.vals[pos] += kl[i][j];
                mass.vals[pos] += ml[i][j];
            }
        }
    }
    Ok((stiffness, mass))
}

/// K u.
pub fn apply_operator(sys: &AssembledSystem, u: &[Complex64]) -> Result<Vec<Complex64>> {
    if u.len() != sys.dim() {
        return Err(Error::Dimension(format!("vector has length {}, system has {}", u.len(), sys.dim())));
    }
    Ok(sys.stiffness.mul_vec(u, Execution::Sequential))
}
