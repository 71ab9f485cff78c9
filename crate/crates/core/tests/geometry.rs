use abspec_core::clip::{clip_convex, clip_disk, clip_halfplane, equal_area_radius, polygon_area};
use abspec_core::geometry::*;
use abspec_core::locate::{barycentric, Locator};
use abspec_core::Error;
use proptest::prelude::*;

fn unit_disk_mesh(h: f64, pole: Point) -> Mesh {
    let d = make_disk_domain(1.0, 64).unwrap();
    mesh_domain(&d, pole, h, default_grading(0.3)).unwrap()
}

fn mesh_area(m: &Mesh) -> f64 {
    (0..m.triangles.len()).map(|t| triangle_area(m.tri_points(t))).sum()
}

#[test]
fn disk_mesh_is_valid_and_covers_polygon() {
    let m = unit_disk_mesh(0.15, [0.0, 0.0]);
    m.validate().unwrap();
    assert_eq!(m.pole(), [0.0, 0.0]);
    let d = make_disk_domain(1.0, 64).unwrap();
    assert!((mesh_area(&m) - d.area()).abs() < 1e-12 * d.area());
    assert!(m.min_quality() > 0.05);
    let bnd = m.is_boundary();
    for e in m.boundary_edges() {
        assert!(bnd[e[0]] && bnd[e[1]]);
    }
    for t in 0..m.triangles.len() {
        assert!(triangle_diameter(m.tri_points(t)) <= 0.15 * (1.0 + 1e-9));
    }
}

#[test]
fn elements_shrink_toward_pole() {
    let m = unit_disk_mesh(0.1, [0.2, -0.1]);
    let p = m.pole();
    let mut near: f64 = 0.0;
    let mut far: f64 = 0.0;
    for t in 0..m.triangles.len() {
        let q = m.tri_points(t);
        let c = [(q[0][0] + q[1][0] + q[2][0]) / 3.0, (q[0][1] + q[1][1] + q[2][1]) / 3.0];
        let d = dist(c, p);
        if d < 0.01 {
            near = near.max(triangle_diameter(q));
        }
        if d > 0.5 {
            far = far.max(triangle_diameter(q));
        }
    }
    assert!(near > 0.0 && near < 0.01, "near {near}");
    assert!(far > 0.05, "far {far}");
}

#[test]
fn pole_validation() {
    let d = make_disk_domain(1.0, 64).unwrap();
    assert!(matches!(mesh_domain(&d, [1.2, 0.0], 0.1, 2.0), Err(Error::PoleOutside(_))));
    assert!(matches!(mesh_domain(&d, [0.95, 0.0], 0.1, 2.0), Err(Error::PoleNearBoundary { .. })));
    assert!(mesh_domain(&d, [0.0, 0.0], -1.0, 2.0).is_err());
    assert!(mesh_domain(&d, [0.0, 0.0], 0.1, 0.5).is_err());
}

#[test]
fn polygon_domain_validation() {
    assert!(Domain::from_polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
    assert!(Domain::from_polygon(bowtie).is_err());
    let cw = vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]];
    let d = Domain::from_polygon(cw).unwrap();
    assert!(d.contains_origin);
    assert!((d.area() - 4.0).abs() < 1e-14);
    assert!((d.boundary_distance([0.0, 0.0]) - 1.0).abs() < 1e-14);
    let big = d.rescaled_to_contain_disk(2.0).unwrap();
    assert!(big.boundary_distance([0.0, 0.0]) >= 2.0);
}

#[test]
fn l_shaped_domain_meshes() {
    let l = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]];
    let d = Domain::from_polygon(l).unwrap();
    let m = mesh_domain(&d, [-0.5, -0.5], 0.2, 3.0).unwrap();
    m.validate().unwrap();
    assert!((mesh_area(&m) - 3.0).abs() < 1e-12);
}

#[test]
fn mesh_round_trips_exactly() {
    let m = unit_disk_mesh(0.2, [0.1, 0.05]);
    let mut buf = Vec::new();
    write_mesh(&m, &mut buf).unwrap();
    let r = read_mesh(&buf[..]).unwrap();
    assert_eq!(r.vertices, m.vertices);
    assert_eq!(r.triangles, m.triangles);
    assert_eq!(r.boundary_vertices, m.boundary_vertices);
    assert_eq!(r.pole_vertex, m.pole_vertex);
    assert!(r.params.is_none());
    assert!(String::from_utf8(buf).unwrap().starts_with("abmesh 1\nv "));
}

#[test]
fn mesh_parse_errors() {
    assert!(matches!(read_mesh(&b"abmesh 2\n"[..]), Err(Error::Parse { line: 1, .. })));
    assert!(read_mesh(&b"abmesh 1\nv 0 0\n"[..]).is_err());
    assert!(matches!(read_mesh(&b"abmesh 1\nv 0 x\n"[..]), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn small_pole_moves_keep_topology() {
    let m = unit_disk_mesh(0.1, [0.0, 0.0]);
    let moved = remesh_for_pole(&m, [0.07, 0.0]).unwrap();
    assert_eq!(moved.triangles, m.triangles);
    assert_eq!(moved.pole(), [0.07, 0.0]);
    moved.validate().unwrap();
    for &b in &m.boundary_vertices {
        assert_eq!(moved.vertices[b], m.vertices[b]);
    }
    // Vertices near the pole translate rigidly.
    for (v, w) in m.vertices.iter().zip(&moved.vertices) {
        if norm(*v) < 0.25 {
            assert!((w[0] - v[0] - 0.07).abs() < 1e-15 && (w[1] - v[1]).abs() < 1e-15);
        }
    }
}

#[test]
fn large_pole_moves_rebuild() {
    let m = unit_disk_mesh(0.1, [0.0, 0.0]);
    let moved = remesh_for_pole(&m, [0.5, 0.2]).unwrap();
    moved.validate().unwrap();
    assert_eq!(moved.pole(), [0.5, 0.2]);
    assert!(remesh_for_pole(&m, [1.5, 0.0]).is_err());
}

#[test]
fn locator_finds_every_centroid() {
    let m = unit_disk_mesh(0.15, [0.0, 0.0]);
    let loc = Locator::new(&m);
    for t in 0..m.triangles.len() {
        let q = m.tri_points(t);
        let c = [(q[0][0] + q[1][0] + q[2][0]) / 3.0, (q[0][1] + q[1][1] + q[2][1]) / 3.0];
        let (found, l) = loc.locate(&m, c).unwrap();
        assert_eq!(found, t);
        assert!(l.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-9));
    }
    assert!(loc.locate(&m, [2.0, 0.0]).is_none());
}

#[test]
fn box_query_contains_located_triangle() {
    let m = unit_disk_mesh(0.15, [0.0, 0.0]);
    let loc = Locator::new(&m);
    let x = [0.3, -0.2];
    let (t, _) = loc.locate(&m, x).unwrap();
    let hits = loc.query_box([0.29, -0.21, 0.31, -0.19]);
    assert!(hits.contains(&t));
    assert!(hits.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn disk_clip_uses_equal_area_polygon() {
    let sq = vec![[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]];
    let a = polygon_area(&clip_disk(&sq, [0.0, 0.0], 1.0));
    assert!((a - std::f64::consts::PI).abs() < 1e-10, "area {a}");
    let r = equal_area_radius(1.0, 16);
    let poly_area = 0.5 * 16.0 * r * r * (std::f64::consts::TAU / 16.0).sin();
    assert!((poly_area - std::f64::consts::PI).abs() < 1e-12);
}

fn tri() -> impl Strategy<Value = [Point; 3]> {
    prop::array::uniform3(prop::array::uniform2(-1.0f64..1.0)).prop_filter("non-degenerate", |p| {
        orient(p[0], p[1], p[2]).abs() > 1e-3
    })
}

fn ccw(mut p: [Point; 3]) -> [Point; 3] {
    if orient(p[0], p[1], p[2]) < 0.0 {
        p.swap(1, 2);
    }
    p
}

proptest! {
    #[test]
    fn barycentric_reconstructs(p in tri(), l0 in 0.0f64..1.0, l1 in 0.0f64..1.0) {
        let (l0, l1) = if l0 + l1 > 1.0 { (1.0 - l0, 1.0 - l1) } else { (l0, l1) };
        let l2 = 1.0 - l0 - l1;
        let x = [
            l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0],
            l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1],
        ];
        let b = barycentric(p, x);
        prop_assert!((b[0] - l0).abs() < 1e-8 && (b[1] - l1).abs() < 1e-8 && (b[2] - l2).abs() < 1e-8);
    }

    #[test]
    fn clipped_area_is_bounded(a in tri(), b in tri()) {
        let (a, b) = (ccw(a), ccw(b));
        let c = clip_convex(&a, &b);
        let ac = if c.len() >= 3 { polygon_area(&c) } else { 0.0 };
        prop_assert!(ac <= triangle_area(a).min(triangle_area(b)) + 1e-12);
        prop_assert!(ac >= -1e-15);
    }

    #[test]
    fn halfplanes_partition_area(a in tri(), nx in -1.0f64..1.0, ny in -1.0f64..1.0, c in -0.5f64..0.5) {
        prop_assume!(nx.hypot(ny) > 1e-3);
        let a = ccw(a);
        let area = |p: Vec<Point>| if p.len() >= 3 { polygon_area(&p) } else { 0.0 };
        let s = area(clip_halfplane(&a, [nx, ny], c)) + area(clip_halfplane(&a, [-nx, -ny], -c));
        prop_assert!((s - triangle_area(a)).abs() < 1e-12);
    }

    #[test]
    fn quality_is_scale_invariant(p in tri(), s in 0.01f64..100.0) {
        let q = p.map(|v| [v[0] * s, v[1] * s]);
        prop_assert!((triangle_quality(p) - triangle_quality(q)).abs() < 1e-9);
        prop_assert!(triangle_quality(p) <= 1.0 + 1e-12);
    }
}
