//! Bounding-volume hierarchy over mesh triangles for point location and
//! box queries.

use crate::geometry::{orient, Mesh, Point};

#[derive(Debug, Clone, Copy)]
struct Node {
    bbox: [f64; 4],
    /// Leaf: `start..start+count` into `order`; inner: children at `left`, `left+1`.
    left: usize,
    start: usize,
    count: usize,
}

#[derive(Debug, Clone)]
pub struct Locator {
    nodes: Vec<Node>,
    order: Vec<usize>,
    boxes: Vec<[f64; 4]>,
}

const LEAF: usize = 8;

fn tri_box(p: [Point; 3]) -> [f64; 4] {
    [
        p[0][0].min(p[1][0]).min(p[2][0]),
        p[0][1].min(p[1][1]).min(p[2][1]),
        p[0][0].max(p[1][0]).max(p[2][0]),
        p[0][1].max(p[1][1]).max(p[2][1]),
    ]
}

fn merge(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])]
}

#[inline]
fn overlaps(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

/// Barycentric coordinates of `x` in triangle `p`.
pub fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let d = orient(p[0], p[1], p[2]);
    let l1 = orient(p[0], x, p[2]) / d;
    let l2 = orient(p[0], p[1], x) / d;
    [1.0 - l1 - l2, l1, l2]
}

impl Locator {
    pub fn new(mesh: &Mesh) -> Locator {
        let boxes: Vec<[f64; 4]> = (0..mesh.triangles.len()).map(|t| tri_box(mesh.tri_points(t))).collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = vec![Node { bbox: [0.0; 4], left: 0, start: 0, count: 0 }];
        let mut stack = vec![(0usize, 0usize, boxes.len())];
        while let Some((id, start, end)) = stack.pop() {
            let bbox = order[start..end]
                .iter()
                .fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |acc, &t| merge(acc, boxes[t]));
            if end - start <= LEAF {
                nodes[id] = Node { bbox, left: 0, start, count: end - start };
                continue;
            }
            let axis = if bbox[2] - bbox[0] >= bbox[3] - bbox[1] { 0 } else { 1 };
            let key = |t: &usize| {
                let b = boxes[*t];
                (b[axis] + b[axis + 2], *t)
            };
            let mid = (start + end) / 2;
            order[start..end].select_nth_unstable_by(mid - start, |a, b| {
                key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
            });
            let left = nodes.len();
            nodes.push(Node { bbox: [0.0; 4], left: 0, start: 0, count: 0 });
            nodes.push(Node { bbox: [0.0; 4], left: 0, start: 0, count: 0 });
            nodes[id] = Node { bbox, left, start: 0, count: 0 };
            stack.push((left + 1, mid, end));
            stack.push((left, start, mid));
        }
        Locator { nodes, order, boxes }
    }

    /// Triangles whose bounding boxes overlap `bbox`, in ascending order.
    pub fn query_box(&self, bbox: [f64; 4]) -> Vec<usize> {
        let mut out = Vec::new();
        if self.order.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let n = self.nodes[id];
            if !overlaps(&n.bbox, &bbox) {
                continue;
            }
            if n.count > 0 {
                for &t in &self.order[n.start..n.start + n.count] {
                    if overlaps(&self.boxes[t], &bbox) {
                        out.push(t);
                    }
                }
            } else {
                stack.push(n.left + 1);
                stack.push(n.left);
            }
        }
        out.sort_unstable();
        out
    }

    /// Triangle containing `x` with its barycentric coordinates.
    ///
    /// Points on shared edges resolve to the lowest-numbered containing
    /// triangle. A small tolerance admits points rounded just outside.
    pub fn locate(&self, mesh: &Mesh, x: Point) -> Option<(usize, [f64; 3])> {
        let e = 1e-12 * (1.0 + x[0].abs().max(x[1].abs()));
        let cands = self.query_box([x[0] - e, x[1] - e, x[0] + e, x[1] + e]);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in cands {
            let l = barycentric(mesh.tri_points(t), x);
            let m = l[0].min(l[1]).min(l[2]);
            if m >= 0.0 {
                return Some((t, l));
            }
            if m > -1e-10 && best.map_or(true, |b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        best.map(|(t, l, _)| {
            let c = [l[0].max(0.0), l[1].max(0.0), l[2].max(0.0)];
            let s = c[0] + c[1] + c[2];
            (t, [c[0] / s, c[1] / s, c[2] / s])
        })
    }
}
