use std::io::{BufRead, Write};

use super::Mesh;
use crate::error::{Error, Result};

/// Write the `abmesh 1` text format.
pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "abmesh 1")?;
    for v in &mesh.vertices {
        writeln!(w, "v {:.16e} {:.16e}", v[0], v[1])?;
    }
    for t in &mesh.triangles {
        writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
    }
    for b in &mesh.boundary_vertices {
        writeln!(w, "b {b}")?;
    }
    writeln!(w, "p {}", mesh.pole_vertex)?;
    Ok(())
}

/// Read the `abmesh 1` text format. The grading exponent is not stored and is
/// set to 1; `h_max` is recovered as the largest element diameter.
pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary_vertices = Vec::new();
    let mut pole = None;
    let mut header = false;
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: ln + 1, msg: msg.to_string() };
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap_or_default();
        if !header {
            if tag != "abmesh" || it.next() != Some("1") {
                return Err(err("expected header `abmesh 1`"));
            }
            header = true;
            continue;
        }
        let fields: Vec<&str> = it.collect();
        let ints = |n: usize| -> Result<Vec<usize>> {
            if fields.len() != n {
                return Err(err("wrong field count"));
            }
            fields.iter().map(|s| s.parse::<usize>().map_err(|_| err("bad index"))).collect()
        };
        match tag {
            "v" => {
                if fields.len() != 2 {
                    return Err(err("wrong field count"));
                }
                let x: f64 = fields[0].parse().map_err(|_| err("bad coordinate"))?;
                let y: f64 = fields[1].parse().map_err(|_| err("bad coordinate"))?;
                vertices.push([x, y]);
            }
            "t" => {
                let v = ints(3)?;
                triangles.push([v[0], v[1], v[2]]);
            }
            "b" => boundary_vertices.push(ints(1)?[0]),
            "p" => pole = Some(ints(1)?[0]),
            _ => return Err(err("unknown record")),
        }
    }
    if !header {
        return Err(Error::Parse { line: 0, msg: "empty input".into() });
    }
    let pole_vertex = pole.ok_or(Error::Parse { line: 0, msg: "missing pole record".into() })?;
    let mut mesh = Mesh {
        vertices,
        triangles,
        boundary_vertices,
        pole_vertex,
        grading_exponent: 1.0,
        h_max: 0.0,
        params: None,
    };
    mesh.validate()?;
    mesh.h_max = (0..mesh.triangles.len())
        .map(|t| super::triangle_diameter(mesh.tri_points(t)))
        .fold(0.0, f64::max);
    Ok(mesh)
}
