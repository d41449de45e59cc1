//! Cutoff functions around a finite proxy S of a singular set.
//!
//! φ = 0 where d_S ≤ ρ, d_S/ρ − 1 where ρ < d_S < 2ρ, and 1 where d_S ≥ 2ρ.

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::gaussian_weight;
use crate::mesh::{to_dvector, DiscreteHypersurface};
use crate::operators::WeightedOperators;
use crate::quadrature::{sphere_area, GaussLegendre};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSetProxy {
    points: Vec<DVector<f64>>,
    rho: f64,
    /// Indices into `points` of the greedy covering centres.
    centers: Vec<usize>,
}

impl SingularSetProxy {
    /// Validate S ⊂ B_{R−1} and ρ < 1/(3R), then cover S greedily: start from the first point
    /// and keep adding the point farthest from the chosen centres while it is farther than ρ.
    pub fn new(points: Vec<DVector<f64>>, rho: f64, ball_radius: f64) -> Result<Self> {
        let bound = 1.0 / (3.0 * ball_radius);
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        if rho >= bound {
            return Err(Error::RhoTooLarge { rho, bound });
        }
        if let Some(p) = points.iter().find(|p| p.norm() > ball_radius - 1.0) {
            return Err(Error::Precondition(format!("point at |x| = {} lies outside B_(R-1)", p.norm())));
        }
        let mut centers = Vec::new();
        if !points.is_empty() {
            centers.push(0);
            let mut gap: Vec<f64> = points.iter().map(|p| (p - &points[0]).norm()).collect();
            loop {
                let (far, &d) = gap.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
                if d <= rho {
                    break;
                }
                centers.push(far);
                for (g, p) in gap.iter_mut().zip(&points) {
                    *g = g.min((p - &points[far]).norm());
                }
            }
        }
        Ok(Self { points, rho, centers })
    }

    pub fn empty(rho: f64, ball_radius: f64) -> Result<Self> {
        Self::new(Vec::new(), rho, ball_radius)
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Number of balls in the greedy covering, an upper bound for Cov_ρ(S).
    pub fn covering_count(&self) -> usize {
        self.centers.len()
    }

    /// The same points with a different ρ (the covering is recomputed).
    pub fn with_rho(&self, rho: f64, ball_radius: f64) -> Result<Self> {
        Self::new(self.points.clone(), rho, ball_radius)
    }

    /// Euclidean distance to S (infinite for empty S).
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        self.points.iter().map(|p| (x - p).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// The three-band profile as a function of d_S.
pub fn cutoff_profile(distance: f64, rho: f64) -> f64 {
    (distance / rho - 1.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffFunction {
    pub rho: f64,
    pub values: Vec<f64>,
}

pub fn build_cutoff(mesh: &DiscreteHypersurface, proxy: &SingularSetProxy) -> Result<CutoffFunction> {
    let radius = mesh.domain_radius();
    let bound = 1.0 / (3.0 * radius);
    if proxy.rho() >= bound {
        return Err(Error::RhoTooLarge { rho: proxy.rho(), bound });
    }
    let values = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| cutoff_profile(proxy.distance(&mesh.point(v)), proxy.rho()))
        .collect();
    Ok(CutoffFunction { rho: proxy.rho(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffEnergy {
    /// ∫|∇φ|² e^{−|x|²/4}.
    pub dirichlet: f64,
    /// ∫(1 − φ²) e^{−|x|²/4}.
    pub deficiency: f64,
}

/// Energies of the piecewise-linear interpolant of φ.
pub fn cutoff_energy(mesh: &DiscreteHypersurface, phi: &CutoffFunction) -> Result<CutoffEnergy> {
    if phi.values.len() != mesh.vertex_count() {
        return Err(Error::FieldLength { expected: mesh.vertex_count(), got: phi.values.len() });
    }
    let ops = WeightedOperators::assemble(mesh);
    let dirichlet = ops.dirichlet_form(&phi.values, &phi.values).max(0.0);
    let deficiency = (0..mesh.simplex_count())
        .map(|s| {
            let idx = mesh.simplex(s);
            mesh.quadrature(s)
                .iter()
                .map(|q| {
                    let value: f64 = idx.iter().zip(&q.barycentric).map(|(&v, b)| phi.values[v] * b).sum();
                    q.weight * gaussian_weight(q.point.norm_squared()) * (1.0 - value * value)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(CutoffEnergy { dirichlet, deficiency })
}

/// Energies of φ on the plane R^n ⊂ R^N (first n coordinates) inside B_R, by polar
/// quadrature around each point of S restricted to its Voronoi cell. Supports n ≤ 3.
pub fn cutoff_energy_plane(n: usize, ball_radius: f64, proxy: &SingularSetProxy) -> Result<CutoffEnergy> {
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let rho = proxy.rho();
    let pts: Vec<DVector<f64>> = proxy.points().iter().map(|p| p.rows(0, n).into_owned()).collect();
    if proxy.points().iter().any(|p| p.iter().skip(n).any(|c| *c != 0.0)) {
        return Err(Error::InvalidParameter("singular points must lie in the plane".into()));
    }
    let directions = sphere_directions(n);
    let radial = GaussLegendre::new(16);
    let per_point: Vec<CutoffEnergy> = (0..pts.len())
        .into_par_iter()
        .map(|j| {
            let s = &pts[j];
            let mut energy = CutoffEnergy { dirichlet: 0.0, deficiency: 0.0 };
            for (omega, dw) in &directions {
                // distance along the ray to the Voronoi boundary of s, capped at 2ρ
                let mut reach = 2.0 * rho;
                for (i, p) in pts.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let d = p - s;
                    let along = d.dot(omega);
                    if along > 0.0 {
                        reach = reach.min(d.norm_squared() / (2.0 * along));
                    }
                }
                let weight = |t: f64| {
                    let x = s + omega * t;
                    if x.norm() > ball_radius {
                        0.0
                    } else {
                        gaussian_weight(x.norm_squared()) * t.powi(n as i32 - 1)
                    }
                };
                let inner = reach.min(rho);
                energy.deficiency += dw * radial.integrate(0.0, inner, weight);
                if reach > rho {
                    energy.dirichlet += dw * radial.integrate(rho, reach, |t| weight(t) / (rho * rho));
                    energy.deficiency += dw
                        * radial.integrate(rho, reach, |t| {
                            let phi = t / rho - 1.0;
                            weight(t) * (1.0 - phi * phi)
                        });
                }
            }
            energy
        })
        .collect();
    Ok(per_point.into_iter().fold(CutoffEnergy { dirichlet: 0.0, deficiency: 0.0 }, |a, e| CutoffEnergy {
        dirichlet: a.dirichlet + e.dirichlet,
        deficiency: a.deficiency + e.deficiency,
    }))
}

/// Directions and weights of a quadrature on S^{n−1} (total weight |S^{n−1}|).
fn sphere_directions(n: usize) -> Vec<(DVector<f64>, f64)> {
    match n {
        1 => vec![(DVector::from_vec(vec![1.0]), 1.0), (DVector::from_vec(vec![-1.0]), 1.0)],
        2 => {
            let m = 720;
            (0..m)
                .map(|i| {
                    let a = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    (DVector::from_vec(vec![a.cos(), a.sin()]), 2.0 * PI / m as f64)
                })
                .collect()
        }
        _ => {
            let polar = GaussLegendre::new(32);
            let m = 64;
            let mut out = Vec::new();
            for (z, wz) in polar.nodes().iter().zip(polar.weights()) {
                let ring = (1.0 - z * z).sqrt();
                for i in 0..m {
                    let a = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    out.push((DVector::from_vec(vec![ring * a.cos(), ring * a.sin(), *z]), wz * 2.0 * PI / m as f64));
                }
            }
            debug_assert!((out.iter().map(|d| d.1).sum::<f64>() - sphere_area(2, 1.0)).abs() < 1e-12);
            out
        }
    }
}

/// Points in the plane spanned by the first n axes of R^ambient.
pub fn plane_points(n: usize, ambient: usize, coords: &[Vec<f64>]) -> Vec<DVector<f64>> {
    coords
        .iter()
        .map(|c| {
            let mut p = DVector::zeros(ambient);
            for (i, v) in c.iter().enumerate().take(n) {
                p[i] = *v;
            }
            p
        })
        .collect()
}

/// Vertex positions as points, for building proxies on meshes.
pub fn mesh_point(mesh: &DiscreteHypersurface, v: usize) -> DVector<f64> {
    to_dvector(&mesh.vertices()[v], mesh.ambient_dim())
}
