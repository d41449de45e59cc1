//! Exact intersections of simplices with balls and spheres centred at the origin.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};

/// Length of the segment [p, q] inside the closed ball of radius r.
pub fn segment_ball_length(p: &Vector3<f64>, q: &Vector3<f64>, r: f64) -> f64 {
    match segment_ball_params(p, q, r) {
        Some((t0, t1)) => (t1 - t0) * (q - p).norm(),
        None => 0.0,
    }
}

/// Parameter interval of [p, q] inside the ball, if any.
fn segment_ball_params(p: &Vector3<f64>, q: &Vector3<f64>, r: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let a = d.norm_squared();
    if a == 0.0 {
        return None;
    }
    let b = p.dot(&d);
    let c = p.norm_squared() - r * r;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t0 = ((-b - s) / a).max(0.0);
    let t1 = ((-b + s) / a).min(1.0);
    (t1 > t0).then_some((t0, t1))
}

/// Points where the segment [p, q] crosses the sphere |x| = r.
pub fn segment_sphere_points(p: &Vector3<f64>, q: &Vector3<f64>, r: f64) -> Vec<Vector3<f64>> {
    let d = q - p;
    let a = d.norm_squared();
    let b = p.dot(&d);
    let c = p.norm_squared() - r * r;
    let disc = b * b - a * c;
    if a == 0.0 || disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    [(-b - s) / a, (-b + s) / a]
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| p + d * t)
        .collect()
}

/// A triangle written in its own plane, with the foot of the origin at (0, 0).
pub struct PlanarTriangle {
    pub corners: [Vector2<f64>; 3],
    /// Distance from the origin to the plane.
    pub offset: f64,
}

impl PlanarTriangle {
    pub fn new(p: &[Vector3<f64>; 3]) -> Self {
        let normal = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
        let foot = normal * normal.dot(&p[0]);
        let e1 = (p[1] - p[0]).normalize();
        let e2 = normal.cross(&e1);
        let corners = p.map(|q| {
            let d = q - foot;
            Vector2::new(d.dot(&e1), d.dot(&e2))
        });
        Self { corners, offset: normal.dot(&p[0]).abs() }
    }

    /// In-plane radius of the slice by the sphere |x| = r, if the sphere reaches the plane.
    pub fn slice_radius(&self, r: f64) -> Option<f64> {
        let s = r * r - self.offset * self.offset;
        (s > 0.0).then(|| s.sqrt())
    }

    /// Area of the triangle inside the ball |x| ≤ r.
    pub fn ball_area(&self, r: f64) -> f64 {
        match self.slice_radius(r) {
            Some(rho) => disk_triangle_area(rho, &self.corners),
            None => 0.0,
        }
    }

    /// Angle of the slice circle lying inside the triangle.
    pub fn slice_angle(&self, r: f64) -> f64 {
        match self.slice_radius(r) {
            Some(rho) => circle_angle_in_triangle(rho, &self.corners),
            None => 0.0,
        }
    }

    /// Whether the foot of the origin lies strictly inside the triangle.
    pub fn foot_inside(&self) -> bool {
        inside(&Vector2::zeros(), &self.corners, 0.0)
    }

    /// Radii where the slice changes combinatorially: the plane offset, the distances to the
    /// edge lines (when the foot on the edge is interior) and the vertex norms.
    pub fn critical_radii(&self) -> Vec<f64> {
        let d2 = self.offset * self.offset;
        let mut out = vec![self.offset];
        for i in 0..3 {
            let (a, b) = (self.corners[i], self.corners[(i + 1) % 3]);
            out.push((a.norm_squared() + d2).sqrt());
            let e = b - a;
            let t = -a.dot(&e) / e.norm_squared();
            if t > 0.0 && t < 1.0 {
                out.push(((a + e * t).norm_squared() + d2).sqrt());
            }
        }
        out
    }
}

/// Area of the intersection of a disk of radius `rho` centred at the origin with a triangle.
pub fn disk_triangle_area(rho: f64, tri: &[Vector2<f64>; 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        total += sector_piece(rho, &tri[i], &tri[(i + 1) % 3]);
    }
    total.abs()
}

/// Signed area of disk ∩ triangle(0, p, q).
fn sector_piece(rho: f64, p: &Vector2<f64>, q: &Vector2<f64>) -> f64 {
    let d = q - p;
    let a = d.norm_squared();
    if a == 0.0 {
        return 0.0;
    }
    let b = p.dot(&d);
    let c = p.norm_squared() - rho * rho;
    let disc = b * b - a * c;
    let mut cuts = vec![0.0];
    if disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-b - s) / a, (-b + s) / a] {
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.push(1.0);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let u = p + d * w[0];
        let v = p + d * w[1];
        let mid = (u + v) * 0.5;
        let cross = u.x * v.y - u.y * v.x;
        if mid.norm_squared() <= rho * rho {
            area += 0.5 * cross;
        } else {
            area += 0.5 * rho * rho * cross.atan2(u.dot(&v));
        }
    }
    area
}

fn inside(p: &Vector2<f64>, tri: &[Vector2<f64>; 3], slack: f64) -> bool {
    let orient = |a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>| (b - a).perp(&(c - a));
    let total = orient(&tri[0], &tri[1], &tri[2]);
    let sign = total.signum();
    (0..3).all(|i| sign * orient(&tri[i], &tri[(i + 1) % 3], p) > -slack * total.abs())
}

/// Total angle of the circle |y| = rho lying inside the triangle.
pub fn circle_angle_in_triangle(rho: f64, tri: &[Vector2<f64>; 3]) -> f64 {
    let mut angles = Vec::new();
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        let d = q - p;
        let a = d.norm_squared();
        let b = p.dot(&d);
        let c = p.norm_squared() - rho * rho;
        let disc = b * b - a * c;
        if a == 0.0 || disc <= 0.0 {
            continue;
        }
        let s = disc.sqrt();
        for t in [(-b - s) / a, (-b + s) / a] {
            if (0.0..=1.0).contains(&t) {
                let x = p + d * t;
                angles.push(x.y.atan2(x.x));
            }
        }
    }
    let on_circle = |theta: f64| Vector2::new(rho * theta.cos(), rho * theta.sin());
    if angles.is_empty() {
        return if inside(&on_circle(0.0), tri, 0.0) { 2.0 * PI } else { 0.0 };
    }
    angles.sort_by(|a, b| a.total_cmp(b));
    let mut total = 0.0;
    for i in 0..angles.len() {
        let a = angles[i];
        let b = if i + 1 < angles.len() { angles[i + 1] } else { angles[0] + 2.0 * PI };
        if b - a <= 0.0 {
            continue;
        }
        if inside(&on_circle(0.5 * (a + b)), tri, 1e-14) {
            total += b - a;
        }
    }
    total
}
