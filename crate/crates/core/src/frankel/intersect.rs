//! Exact simplex-pair intersection with a uniform-grid broad phase.

use nalgebra::Vector3;
use rayon::prelude::*;
use robust::{orient2d, orient3d, Coord, Coord3D};
use rstar::{RTree, RTreeObject, AABB};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::DiscreteHypersurface;

/// A pair of intersecting simplices and one common point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness(pub usize, pub usize, pub Vec<f64>);

impl Witness {
    pub fn point(&self) -> Vector3<f64> {
        Vector3::new(self.2[0], self.2[1], self.2.get(2).copied().unwrap_or(0.0))
    }
}

fn o2(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let p = |v: &Vector3<f64>| Coord { x: v.x, y: v.y };
    orient2d(p(a), p(b), p(c))
}

fn o3(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
    let p = |v: &Vector3<f64>| Coord3D { x: v.x, y: v.y, z: v.z };
    orient3d(p(a), p(b), p(c), p(d))
}

/// Common point of two segments in the xy-plane, touching and collinear overlap included.
pub fn segment_segment(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> Option<Vector3<f64>> {
    let d1 = o2(a, b, c);
    let d2 = o2(a, b, d);
    let d3 = o2(c, d, a);
    let d4 = o2(c, d, b);
    if d1 == 0.0 && d2 == 0.0 {
        return collinear_overlap(a, b, c, d);
    }
    if d1 * d2 > 0.0 || d3 * d4 > 0.0 {
        return None;
    }
    // the segments meet; locate the point on [c, d] from the side tests of a, b
    if d1 == 0.0 {
        return Some(*c);
    }
    if d2 == 0.0 {
        return Some(*d);
    }
    let t = d1 / (d1 - d2);
    Some(c + (d - c) * t)
}

fn collinear_overlap(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> Option<Vector3<f64>> {
    let axis = if (b.x - a.x).abs() + (d.x - c.x).abs() >= (b.y - a.y).abs() + (d.y - c.y).abs() { 0 } else { 1 };
    let key = |v: &Vector3<f64>| v[axis];
    let (lo1, hi1) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    let (lo2, hi2) = if key(c) <= key(d) { (c, d) } else { (d, c) };
    let lo = if key(lo1) >= key(lo2) { lo1 } else { lo2 };
    let hi = if key(hi1) <= key(hi2) { hi1 } else { hi2 };
    (key(lo) <= key(hi)).then(|| (lo + hi) * 0.5)
}

fn dominant_axis(n: &Vector3<f64>) -> usize {
    n.iamax()
}

fn drop_axis(v: &Vector3<f64>, axis: usize) -> Vector3<f64> {
    match axis {
        0 => Vector3::new(v.y, v.z, 0.0),
        1 => Vector3::new(v.z, v.x, 0.0),
        _ => Vector3::new(v.x, v.y, 0.0),
    }
}

fn point_in_triangle_2d(p: &Vector3<f64>, t: &[Vector3<f64>; 3]) -> bool {
    let s = [o2(&t[0], &t[1], p), o2(&t[1], &t[2], p), o2(&t[2], &t[0], p)];
    s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0)
}

/// Common point of the segment [p, q] and the triangle t, exact predicates throughout.
pub fn segment_triangle(p: &Vector3<f64>, q: &Vector3<f64>, t: &[Vector3<f64>; 3]) -> Option<Vector3<f64>> {
    let op = o3(&t[0], &t[1], &t[2], p);
    let oq = o3(&t[0], &t[1], &t[2], q);
    if op * oq > 0.0 {
        return None;
    }
    if op == 0.0 && oq == 0.0 {
        let normal = (t[1] - t[0]).cross(&(t[2] - t[0]));
        let axis = dominant_axis(&normal);
        let tp = t.map(|v| drop_axis(&v, axis));
        let (pp, qq) = (drop_axis(p, axis), drop_axis(q, axis));
        if point_in_triangle_2d(&pp, &tp) {
            return Some(*p);
        }
        if point_in_triangle_2d(&qq, &tp) {
            return Some(*q);
        }
        for i in 0..3 {
            if let Some(x) = segment_segment(&pp, &qq, &tp[i], &tp[(i + 1) % 3]) {
                // recover the 3D point on [p, q] from the planar parameter
                let e = qq - pp;
                let s = if e.norm_squared() > 0.0 { (x - pp).dot(&e) / e.norm_squared() } else { 0.0 };
                return Some(p + (q - p) * s.clamp(0.0, 1.0));
            }
        }
        return None;
    }
    let s = [o3(p, q, &t[0], &t[1]), o3(p, q, &t[1], &t[2]), o3(p, q, &t[2], &t[0])];
    let inside = s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0);
    inside.then(|| p + (q - p) * (op / (op - oq)))
}

/// Common point of two triangles: some edge of one meets the other.
pub fn triangle_triangle(a: &[Vector3<f64>; 3], b: &[Vector3<f64>; 3]) -> Option<Vector3<f64>> {
    for i in 0..3 {
        if let Some(x) = segment_triangle(&a[i], &a[(i + 1) % 3], b) {
            return Some(x);
        }
    }
    for i in 0..3 {
        if let Some(x) = segment_triangle(&b[i], &b[(i + 1) % 3], a) {
            return Some(x);
        }
    }
    None
}

pub(crate) fn simplex_points(mesh: &DiscreteHypersurface, s: usize) -> Vec<Vector3<f64>> {
    mesh.simplex(s).iter().map(|&v| mesh.vertices()[v]).collect()
}

/// Common point of simplex `sa` of `a` and simplex `sb` of `b`.
pub fn simplex_pair(a: &DiscreteHypersurface, sa: usize, b: &DiscreteHypersurface, sb: usize) -> Option<Vector3<f64>> {
    let p = simplex_points(a, sa);
    let q = simplex_points(b, sb);
    if a.dim() == 1 {
        segment_segment(&p[0], &p[1], &q[0], &q[1])
    } else {
        triangle_triangle(&[p[0], p[1], p[2]], &[q[0], q[1], q[2]])
    }
}

/// Common point of a straight segment and a simplex.
pub fn segment_simplex(p: &Vector3<f64>, q: &Vector3<f64>, mesh: &DiscreteHypersurface, s: usize) -> Option<Vector3<f64>> {
    let t = simplex_points(mesh, s);
    if mesh.dim() == 1 {
        segment_segment(p, q, &t[0], &t[1])
    } else {
        segment_triangle(p, q, &[t[0], t[1], t[2]])
    }
}

/// A simplex stored in an R*-tree by its bounding box.
pub(crate) struct SimplexBox {
    pub index: usize,
    pub points: Vec<Vector3<f64>>,
}

impl SimplexBox {
    pub fn of(mesh: &DiscreteHypersurface, s: usize) -> Self {
        Self { index: s, points: simplex_points(mesh, s) }
    }

    pub fn tree(mesh: &DiscreteHypersurface) -> RTree<SimplexBox> {
        RTree::bulk_load((0..mesh.simplex_count()).map(|s| Self::of(mesh, s)).collect())
    }
}

impl RTreeObject for SimplexBox {
    type Envelope = AABB<[f64; 3]>;

    fn envelope(&self) -> Self::Envelope {
        AABB::from_points(self.points.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>().iter())
    }
}

/// All intersecting simplex pairs whose witness point lies in the closed ball of radius `radius`.
pub fn intersection_test(a: &DiscreteHypersurface, b: &DiscreteHypersurface, radius: f64) -> Result<Vec<Witness>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("surfaces of dimension {} and {}", a.dim(), b.dim())));
    }
    if a.simplex_count() == 0 || b.simplex_count() == 0 {
        return Ok(Vec::new());
    }
    let tree = SimplexBox::tree(b);
    let ambient = a.ambient_dim();
    let mut out: Vec<Witness> = (0..a.simplex_count())
        .into_par_iter()
        .flat_map_iter(|sa| {
            let envelope = SimplexBox::of(a, sa).envelope();
            let tree = &tree;
            tree.locate_in_envelope_intersecting(&envelope)
                .map(|b| b.index)
                .collect::<Vec<_>>()
                .into_iter()
                .filter_map(move |sb| {
                    let x = simplex_pair(a, sa, b, sb)?;
                    (x.norm() <= radius * (1.0 + 1e-12)).then(|| Witness(sa, sb, x.as_slice()[..ambient].to_vec()))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok(out)
}
