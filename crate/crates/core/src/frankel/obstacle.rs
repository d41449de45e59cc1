//! Projected descent of the discrete Gaussian area inside an obstacle region
//! Ω̄ = {|x| ≤ R} ∩ {on the seed's side of every obstacle surface}.

use nalgebra::Vector3;
use serde::Serialize;

use super::distance::SignedDistance;
use crate::error::{Error, Result};
use crate::functional::{gaussian_weight, normalization};
use crate::quadrature::GaussLegendre;
use crate::mesh::DiscreteHypersurface;

const FEASIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Contact {
    Free,
    /// On obstacle surface i.
    Obstacle(usize),
    /// On the sphere |x| = R.
    Ball,
}

pub struct ObstacleRegion<'a> {
    obstacles: Vec<(SignedDistance<'a>, f64)>,
    radius: f64,
}

impl<'a> ObstacleRegion<'a> {
    /// Region on the same side of each surface as `seed`.
    pub fn new(surfaces: &[&'a DiscreteHypersurface], seed: &Vector3<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius {radius} must be positive")));
        }
        let mut obstacles = Vec::new();
        for (i, mesh) in surfaces.iter().enumerate() {
            let sd = SignedDistance::new(mesh);
            let side = match sd.query(seed) {
                Some(c) if c.distance != 0.0 => c.distance.signum(),
                Some(_) => return Err(Error::InvalidParameter(format!("seed lies on obstacle {i}"))),
                None => 1.0,
            };
            obstacles.push((sd, side));
        }
        Ok(Self { obstacles, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance into the region from obstacle i (negative outside).
    pub fn depth(&self, i: usize, x: &Vector3<f64>) -> f64 {
        let (sd, side) = &self.obstacles[i];
        sd.query(x).map_or(f64::INFINITY, |c| side * c.distance)
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        let scale = self.radius.max(1.0) * FEASIBILITY_TOL;
        x.norm() <= self.radius + scale && (0..self.obstacles.len()).all(|i| self.depth(i, x) >= -scale)
    }

    /// Unit normals pointing into the region for every constraint active at x.
    pub fn active_normals(&self, x: &Vector3<f64>, tol: f64) -> Vec<(Contact, Vector3<f64>)> {
        let mut out = Vec::new();
        if x.norm() >= self.radius - tol {
            out.push((Contact::Ball, -x.normalize()));
        }
        for (i, (sd, side)) in self.obstacles.iter().enumerate() {
            if let Some(c) = sd.query(x) {
                if side * c.distance <= tol {
                    out.push((Contact::Obstacle(i), c.normal * *side));
                }
            }
        }
        out
    }

    /// Closest-point projection onto Ω̄, alternating over the constraints.
    pub fn project(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let mut y = *x;
        for _ in 0..16 {
            let mut moved = false;
            if y.norm() > self.radius {
                y *= self.radius / y.norm();
                moved = true;
            }
            for (sd, side) in &self.obstacles {
                if let Some(c) = sd.query(&y) {
                    if side * c.distance < 0.0 {
                        y = c.point;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        y
    }

    /// Last feasible point on the straight path from a feasible `from` to `to`.
    pub fn clip_path(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> Vector3<f64> {
        if self.contains(to) {
            return *to;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if self.contains(&(from + (to - from) * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        from + (to - from) * lo
    }
}

/// A polyline (n = 1) or triangulated graph (n = 2) with fixed vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub dim: usize,
    pub vertices: Vec<Vector3<f64>>,
    pub simplices: Vec<usize>,
    pub fixed: Vec<bool>,
}

impl Chain {
    pub fn from_mesh(mesh: &DiscreteHypersurface) -> Self {
        Self {
            dim: mesh.dim(),
            vertices: mesh.vertices().to_vec(),
            simplices: mesh.simplices().flatten().copied().collect(),
            fixed: mesh.boundary_vertices().to_vec(),
        }
    }

    pub fn simplex(&self, s: usize) -> &[usize] {
        &self.simplices[s * (self.dim + 1)..(s + 1) * (self.dim + 1)]
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    fn volume_and_gradient(&self, s: usize) -> (f64, Vec<Vector3<f64>>) {
        let idx = self.simplex(s);
        let p: Vec<Vector3<f64>> = idx.iter().map(|&v| self.vertices[v]).collect();
        if self.dim == 1 {
            let d = p[1] - p[0];
            let len = d.norm();
            if len == 0.0 {
                return (0.0, vec![Vector3::zeros(); 2]);
            }
            let u = d / len;
            (len, vec![-u, u])
        } else {
            let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let twice = cross.norm();
            if twice == 0.0 {
                return (0.0, vec![Vector3::zeros(); 3]);
            }
            let n = cross / twice;
            // ∂A/∂p_i = ½ n × (p_{i+2} − p_{i+1})
            let grads = (0..3).map(|i| n.cross(&(p[(i + 2) % 3] - p[(i + 1) % 3])) * 0.5).collect();
            (0.5 * twice, grads)
        }
    }

    /// Discrete F and its gradient: Gauss-Legendre (4 points) along each segment, the
    /// edge-midpoint rule on each triangle.
    pub fn energy_and_gradient(&self) -> (f64, Vec<Vector3<f64>>) {
        let c = normalization(self.dim);
        let mut f = 0.0;
        let mut grad = vec![Vector3::zeros(); self.vertices.len()];
        let dweight = |x: &Vector3<f64>| -> (f64, Vector3<f64>) {
            let g = gaussian_weight(x.norm_squared());
            (g, x * (-0.5 * g))
        };
        if self.dim == 1 {
            let gl = GaussLegendre::new(4);
            for s in 0..self.simplex_count() {
                let idx = self.simplex(s);
                let (p, q) = (self.vertices[idx[0]], self.vertices[idx[1]]);
                let d = q - p;
                let len = d.norm();
                if len == 0.0 {
                    continue;
                }
                let u = d / len;
                let (mut mean, mut gp, mut gq) = (0.0, Vector3::zeros(), Vector3::zeros());
                for (&node, &w) in gl.nodes().iter().zip(gl.weights()) {
                    let t = 0.5 * (node + 1.0);
                    let w = 0.5 * w;
                    let (g, dg) = dweight(&(p + d * t));
                    mean += w * g;
                    gp += dg * (w * (1.0 - t));
                    gq += dg * (w * t);
                }
                f += c * len * mean;
                grad[idx[0]] += (-u * mean + gp * len) * c;
                grad[idx[1]] += (u * mean + gq * len) * c;
            }
            return (f, grad);
        }
        for s in 0..self.simplex_count() {
            let idx = self.simplex(s);
            let (area, darea) = self.volume_and_gradient(s);
            let mut mean = 0.0;
            for i in 0..3 {
                let (a, b) = (idx[i], idx[(i + 1) % 3]);
                let (g, dg) = dweight(&((self.vertices[a] + self.vertices[b]) * 0.5));
                mean += g / 3.0;
                // each midpoint moves with half of each endpoint
                grad[a] += dg * (c * area / 6.0);
                grad[b] += dg * (c * area / 6.0);
            }
            f += c * area * mean;
            for i in 0..3 {
                grad[idx[i]] += darea[i] * (c * mean);
            }
        }
        (f, grad)
    }

    /// Unit vertex normals of a polyline from the neighbouring vertices.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut tangent = vec![Vector3::zeros(); self.vertices.len()];
        for s in 0..self.simplex_count() {
            let idx = self.simplex(s);
            let d = self.vertices[idx[1]] - self.vertices[idx[0]];
            if d.norm() > 0.0 {
                let u = d.normalize();
                tangent[idx[0]] += u;
                tangent[idx[1]] += u;
            }
        }
        tangent.iter().map(|t| if t.norm() > 0.0 { Vector3::new(t.y, -t.x, 0.0).normalize() } else { Vector3::zeros() }).collect()
    }

    pub fn energy(&self) -> f64 {
        self.energy_and_gradient().0
    }

    /// Descent direction in the H¹ metric: solves (D + L)d = −∇F with D the dual volumes and
    /// L the edge Laplacian with weights (m_i + m_j)/(2|e|²), fixed vertices held at zero.
    /// With `axes`, every vertex moves only along its own axis.
    pub fn sobolev_direction(&self, grad: &[Vector3<f64>], dual: &[f64], axes: Option<&[Vector3<f64>]>) -> Vec<Vector3<f64>> {
        let nv = self.vertices.len();
        let free = |v: usize| !self.fixed[v] && dual[v] > 0.0;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for s in 0..self.simplex_count() {
            let idx = self.simplex(s);
            for i in 0..idx.len() {
                for j in i + 1..idx.len() {
                    edges.push((idx[i].min(idx[j]), idx[i].max(idx[j])));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let weights: Vec<f64> = edges
            .iter()
            .map(|&(a, b)| {
                let len2 = (self.vertices[a] - self.vertices[b]).norm_squared();
                if len2 > 0.0 { 0.5 * (dual[a] + dual[b]) / len2 } else { 0.0 }
            })
            .collect();
        let mut diag: Vec<f64> = dual.to_vec();
        for (&(a, b), w) in edges.iter().zip(&weights) {
            diag[a] += w;
            diag[b] += w;
        }
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut y: Vec<f64> = (0..nv).map(|v| dual[v] * x[v]).collect();
            for (&(a, b), w) in edges.iter().zip(&weights) {
                let d = w * (x[a] - x[b]);
                y[a] += d;
                y[b] -= d;
            }
            for v in 0..nv {
                if !free(v) {
                    y[v] = 0.0;
                }
            }
            y
        };
        let solve = |rhs: Vec<f64>| -> Vec<f64> {
            let mut x = vec![0.0; nv];
            let mut r = rhs;
            let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm0 == 0.0 {
                return x;
            }
            let precond = |r: &[f64]| -> Vec<f64> { (0..nv).map(|v| if free(v) { r[v] / diag[v] } else { 0.0 }).collect() };
            let mut z = precond(&r);
            let mut p = z.clone();
            let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            for _ in 0..4 * nv.max(10) {
                let ap = apply(&p);
                let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
                for v in 0..nv {
                    x[v] += alpha * p[v];
                    r[v] -= alpha * ap[v];
                }
                if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-12 * norm0 {
                    break;
                }
                z = precond(&r);
                let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
                for v in 0..nv {
                    p[v] = z[v] + rz_new / rz * p[v];
                }
                rz = rz_new;
            }
            x
        };
        match axes {
            Some(axes) => {
                let rhs: Vec<f64> = (0..nv).map(|v| if free(v) { -grad[v].dot(&axes[v]) } else { 0.0 }).collect();
                let x = solve(rhs);
                x.iter().zip(axes).map(|(t, e)| e * *t).collect()
            }
            None => {
                let comps: Vec<Vec<f64>> = (0..3)
                    .map(|i| solve((0..nv).map(|v| if free(v) { -grad[v][i] } else { 0.0 }).collect()))
                    .collect();
                (0..nv).map(|v| Vector3::new(comps[0][v], comps[1][v], comps[2][v])).collect()
            }
        }
    }

    /// Unweighted lumped dual volumes.
    pub fn dual_volumes(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        for s in 0..self.simplex_count() {
            let (vol, _) = self.volume_and_gradient(s);
            for &v in self.simplex(s) {
                m[v] += vol / (self.dim + 1) as f64;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop when the feasible first-variation residual is at most tolerance · F.
    pub tolerance: f64,
    /// Initial trial displacement of each line search (h/2 by default).
    pub initial_step: Option<f64>,
    /// Moves restricted to this direction (graph mode for n = 2). Without it, polyline
    /// vertices move along their normals and surface vertices freely.
    pub direction: Option<[f64; 3]>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iterations: 20_000, tolerance: 1e-6, initial_step: None, direction: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleMinimizer {
    pub gamma: Chain,
    pub contact: Vec<Contact>,
    pub f_initial: f64,
    pub f_final: f64,
    /// Discrete F after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
    /// Feasible first-variation residual at the end.
    pub residual: f64,
    /// Largest inward component of −∇F over contact vertices, in the residual's norm.
    pub complementarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ObstacleMinimizer {
    pub fn monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0])
    }
}

struct Stationarity {
    residual: f64,
    complementarity: f64,
    contact: Vec<Contact>,
}

fn stationarity(
    region: &ObstacleRegion,
    chain: &Chain,
    grad: &[Vector3<f64>],
    dual: &[f64],
    axes: Option<&[Vector3<f64>]>,
    tol: f64,
) -> Stationarity {
    let mut residual = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut contact = vec![Contact::Free; chain.vertices.len()];
    for v in 0..chain.vertices.len() {
        if chain.fixed[v] || dual[v] == 0.0 {
            continue;
        }
        let axis = axes.map(|a| a[v]);
        let mut r = match axis {
            Some(e) => e * e.dot(&grad[v]),
            None => grad[v],
        };
        let active = region.active_normals(&chain.vertices[v], tol);
        if let Some((kind, _)) = active.first() {
            contact[v] = *kind;
        }
        for (_, nu) in &active {
            let nu = match axis {
                Some(e) => e * e.dot(nu),
                None => *nu,
            };
            if nu.norm() == 0.0 {
                continue;
            }
            let nu = nu.normalize();
            // −r·ν > 0 means descent would go further into the region
            let inward = -r.dot(&nu);
            if inward < 0.0 {
                r += nu * inward;
            } else {
                complementarity = complementarity.max(inward / dual[v].sqrt());
            }
        }
        residual += r.norm_squared() / dual[v];
    }
    Stationarity { residual: residual.sqrt(), complementarity, contact }
}

/// Projected preconditioned gradient descent with monotone backtracking.
pub fn minimize_f_obstacle(region: &ObstacleRegion, initial: Chain, opts: &MinimizeOptions) -> Result<ObstacleMinimizer> {
    let mut chain = initial;
    for v in 0..chain.vertices.len() {
        if !region.contains(&chain.vertices[v]) {
            if chain.fixed[v] {
                return Err(Error::InfeasibleBoundary { vertex: v });
            }
            chain.vertices[v] = region.project(&chain.vertices[v]);
        }
    }
    let mut h: f64 = 0.0;
    for s in 0..chain.simplex_count() {
        let idx = chain.simplex(s);
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                h = h.max((chain.vertices[idx[i]] - chain.vertices[idx[j]]).norm());
            }
        }
    }
    let step0 = opts.initial_step.unwrap_or(0.5 * h);
    let direction = opts.direction.map(|d| Vector3::from(d).normalize());
    let axes_of = |chain: &Chain| -> Option<Vec<Vector3<f64>>> {
        match (direction, chain.dim) {
            (Some(e), _) => Some(vec![e; chain.vertices.len()]),
            (None, 1) => Some(chain.vertex_normals()),
            (None, _) => None,
        }
    };
    let contact_tol = 1e-9 * region.radius().max(1.0);

    let (mut f, mut grad) = chain.energy_and_gradient();
    let mut dual = chain.dual_volumes();
    let f_initial = f;
    let mut history = vec![f];
    let mut axes = axes_of(&chain);
    let mut stat = stationarity(region, &chain, &grad, &dual, axes.as_deref(), contact_tol);
    let mut iterations = 0;
    let mut converged = stat.residual <= opts.tolerance * f;
    while !converged && iterations < opts.max_iterations && step0 > 0.0 {
        iterations += 1;
        let dir = chain.sobolev_direction(&grad, &dual, axes.as_deref());
        let scale = dir.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            break;
        }
        let mut step = step0 / scale;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = chain.clone();
            for v in 0..trial.vertices.len() {
                if dir[v] == Vector3::zeros() {
                    continue;
                }
                let target = chain.vertices[v] + dir[v] * step;
                trial.vertices[v] = match direction {
                    Some(_) => region.clip_path(&chain.vertices[v], &target),
                    None => region.project(&target),
                };
            }
            let decrease: f64 = (0..trial.vertices.len()).map(|v| grad[v].dot(&(chain.vertices[v] - trial.vertices[v]))).sum();
            let (f_trial, g_trial) = trial.energy_and_gradient();
            if f_trial < f && f - f_trial >= 1e-4 * decrease {
                chain = trial;
                f = f_trial;
                grad = g_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(f);
        dual = chain.dual_volumes();
        axes = axes_of(&chain);
        stat = stationarity(region, &chain, &grad, &dual, axes.as_deref(), contact_tol);
        converged = stat.residual <= opts.tolerance * f;
    }
    Ok(ObstacleMinimizer {
        gamma: chain,
        contact: stat.contact,
        f_initial,
        f_final: f,
        history,
        residual: stat.residual,
        complementarity: stat.complementarity,
        iterations,
        converged,
    })
}
