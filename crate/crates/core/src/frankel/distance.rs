//! Signed distance to a simplicial hypersurface with angle-weighted pseudonormals.

use std::collections::HashMap;

use nalgebra::Vector3;

use rstar::{PointDistance, RTree};

use super::intersect::{simplex_points, SimplexBox};
use crate::mesh::DiscreteHypersurface;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Feature {
    Vertex(usize),
    Edge(usize, usize),
    Face(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closest {
    /// Signed distance, positive on the side the pseudonormal points to.
    pub distance: f64,
    pub point: Vector3<f64>,
    /// Unit pseudonormal of the closest feature.
    pub normal: Vector3<f64>,
    pub simplex: usize,
}

pub struct SignedDistance<'a> {
    mesh: &'a DiscreteHypersurface,
    tree: RTree<SimplexBox>,
    face_normals: Vec<Vector3<f64>>,
    vertex_normals: Vec<Vector3<f64>>,
    edge_normals: HashMap<(usize, usize), Vector3<f64>>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl<'a> SignedDistance<'a> {
    pub fn new(mesh: &'a DiscreteHypersurface) -> Self {
        let face_normals: Vec<Vector3<f64>> = (0..mesh.simplex_count()).map(|s| mesh.simplex_normal(s)).collect();
        let mut vertex_normals = vec![Vector3::zeros(); mesh.vertex_count()];
        let mut edge_normals: HashMap<(usize, usize), Vector3<f64>> = HashMap::new();
        for s in 0..mesh.simplex_count() {
            let idx = mesh.simplex(s);
            let p = simplex_points(mesh, s);
            let nf = face_normals[s];
            if mesh.dim() == 1 {
                vertex_normals[idx[0]] += nf;
                vertex_normals[idx[1]] += nf;
                continue;
            }
            for i in 0..3 {
                let (u, w) = (p[(i + 1) % 3] - p[i], p[(i + 2) % 3] - p[i]);
                let angle = u.angle(&w);
                vertex_normals[idx[i]] += nf * angle;
                *edge_normals.entry(edge_key(idx[i], idx[(i + 1) % 3])).or_insert_with(Vector3::zeros) += nf;
            }
        }
        for n in vertex_normals.iter_mut().chain(edge_normals.values_mut()) {
            if n.norm() > 0.0 {
                n.normalize_mut();
            }
        }
        Self { mesh, tree: SimplexBox::tree(mesh), face_normals, vertex_normals, edge_normals }
    }

    pub fn mesh(&self) -> &DiscreteHypersurface {
        self.mesh
    }

    fn closest_on(&self, s: usize, x: &Vector3<f64>) -> (Vector3<f64>, Feature) {
        let idx = self.mesh.simplex(s);
        let p = simplex_points(self.mesh, s);
        if self.mesh.dim() == 1 {
            let d = p[1] - p[0];
            let t = ((x - p[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            let feature = if t == 0.0 {
                Feature::Vertex(idx[0])
            } else if t == 1.0 {
                Feature::Vertex(idx[1])
            } else {
                Feature::Face(s)
            };
            (p[0] + d * t, feature)
        } else {
            closest_on_triangle(x, &[p[0], p[1], p[2]], [idx[0], idx[1], idx[2]], s)
        }
    }

    fn pseudonormal(&self, f: Feature) -> Vector3<f64> {
        match f {
            Feature::Vertex(v) => self.vertex_normals[v],
            Feature::Edge(a, b) => self.edge_normals[&edge_key(a, b)],
            Feature::Face(s) => self.face_normals[s],
        }
    }

    /// Closest point on the surface.
    pub fn query(&self, x: &Vector3<f64>) -> Option<Closest> {
        let s = self.tree.nearest_neighbor(&[x.x, x.y, x.z])?.index;
        let (point, feature) = self.closest_on(s, x);
        let normal = self.pseudonormal(feature);
        let sign = if (x - point).dot(&normal) < 0.0 { -1.0 } else { 1.0 };
        Some(Closest { distance: sign * (x - point).norm(), point, normal, simplex: s })
    }
}

impl PointDistance for SimplexBox {
    fn distance_2(&self, point: &[f64; 3]) -> f64 {
        let x = Vector3::from(*point);
        let c = match self.points.len() {
            2 => {
                let d = self.points[1] - self.points[0];
                let t = ((x - self.points[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                self.points[0] + d * t
            }
            _ => closest_on_triangle(&x, &[self.points[0], self.points[1], self.points[2]], [0, 1, 2], 0).0,
        };
        (x - c).norm_squared()
    }
}

/// Closest point on a triangle (Ericson's region tests) and the feature it lies on.
fn closest_on_triangle(p: &Vector3<f64>, t: &[Vector3<f64>; 3], idx: [usize; 3], s: usize) -> (Vector3<f64>, Feature) {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, Feature::Vertex(idx[0]));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, Feature::Vertex(idx[1]));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(idx[0], idx[1]));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, Feature::Vertex(idx[2]));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(idx[0], idx[2]));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(idx[1], idx[2]));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face(s))
}
