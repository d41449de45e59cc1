//! Lowest Dirichlet eigenvalue of −L by shifted inverse iteration on the pencil
//! (K − P, M) restricted to interior vertices, where P = diag(M_i(|A|²_i + ½)).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::WeightedOperators;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub max_iterations: usize,
    /// Target for ‖(−L − λ)w‖_w / ‖w‖_w.
    pub tolerance: f64,
    pub cg_tolerance: f64,
    pub max_cg_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, tolerance: 1e-8, cg_tolerance: 1e-13, max_cg_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub eigenvalue: f64,
    /// Weighted relative residual of the eigenpair.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub shift: f64,
    /// Eigenvector on all vertices (zero on the boundary), unit in the weighted norm.
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
}

struct Pencil {
    interior: Vec<usize>,
    // CSR of K restricted to the interior
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    potential: Vec<f64>,
    mass: Vec<f64>,
}

impl Pencil {
    fn new(ops: &WeightedOperators) -> Result<Self> {
        let potential_all = ops.potential().ok_or(Error::MissingCurvature)?;
        let interior: Vec<usize> = (0..ops.vertex_count()).filter(|&i| !ops.boundary()[i]).collect();
        if interior.is_empty() {
            return Err(Error::InvalidParameter("no interior vertices".into()));
        }
        let mut local = vec![usize::MAX; ops.vertex_count()];
        for (l, &g) in interior.iter().enumerate() {
            local[g] = l;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut mass = Vec::with_capacity(interior.len());
        let mut potential = Vec::with_capacity(interior.len());
        for &g in &interior {
            let m = ops.mass()[g];
            if m <= 0.0 {
                return Err(Error::SingularMass { vertex: g, mass: m });
            }
            mass.push(m);
            potential.push(m * potential_all[g]);
            let row = ops.stiffness().row(g);
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                if local[j] != usize::MAX {
                    cols.push(local[j]);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { interior, row_ptr, cols, vals, potential, mass })
    }

    fn len(&self) -> usize {
        self.interior.len()
    }

    fn diag(&self, i: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1]).filter(|&e| self.cols[e] == i).map(|e| self.vals[e]).sum()
    }

    /// (K − P − σM)x.
    fn apply(&self, x: &[f64], sigma: f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let kx: f64 = (self.row_ptr[i]..self.row_ptr[i + 1]).map(|e| self.vals[e] * x[self.cols[e]]).sum();
                kx - (self.potential[i] + sigma * self.mass[i]) * x[i]
            })
            .collect()
    }

    /// A provable lower bound on the smallest eigenvalue of the pencil: the larger of the
    /// Gershgorin bound of M^{−1/2}(K − P)M^{−1/2} and −max(|A|² + ½) (K is semidefinite).
    fn lower_bound(&self) -> f64 {
        let gershgorin = (0..self.len())
            .map(|i| {
                let mut off = 0.0;
                for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.cols[e];
                    if j != i {
                        off += self.vals[e].abs() / (self.mass[i] * self.mass[j]).sqrt();
                    }
                }
                (self.diag(i) - self.potential[i]) / self.mass[i] - off
            })
            .fold(f64::INFINITY, f64::min);
        let potential = (0..self.len()).map(|i| -self.potential[i] / self.mass[i]).fold(f64::INFINITY, f64::min);
        gershgorin.max(potential)
    }

    /// Jacobi-preconditioned conjugate gradients for (K − P − σM)x = b.
    fn solve(&self, b: &[f64], x0: Vec<f64>, sigma: f64, opts: &EigenOptions) -> Vec<f64> {
        let inv_diag: Vec<f64> =
            (0..self.len()).map(|i| 1.0 / (self.diag(i) - self.potential[i] - sigma * self.mass[i])).collect();
        let mut x = x0;
        let ax = self.apply(&x, sigma);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            return vec![0.0; b.len()];
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..opts.max_cg_iterations {
            if dot(&r, &r).sqrt() <= opts.cg_tolerance * b_norm {
                break;
            }
            let ap = self.apply(&p, sigma);
            let alpha = rz / dot(&p, &ap);
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            z = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lowest_dirichlet_eigenvalue(ops: &WeightedOperators) -> Result<SpectralReport> {
    lowest_dirichlet_eigenvalue_with(ops, &EigenOptions::default())
}

pub fn lowest_dirichlet_eigenvalue_with(ops: &WeightedOperators, opts: &EigenOptions) -> Result<SpectralReport> {
    let pencil = Pencil::new(ops)?;
    let bound = pencil.lower_bound();
    let sigma = bound - 0.05 * bound.abs().max(1.0);
    let n = pencil.len();

    let normalize = |x: &mut Vec<f64>| {
        let norm = x.iter().zip(&pencil.mass).map(|(v, m)| m * v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    };
    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut guess = vec![0.0; n];
    while iterations < opts.max_iterations {
        iterations += 1;
        let mx: Vec<f64> = x.iter().zip(&pencil.mass).map(|(v, m)| v * m).collect();
        let mut y = pencil.solve(&mx, guess, sigma, opts);
        normalize(&mut y);
        x = y;
        // Rayleigh quotient xᵀ(K − P)x with ‖x‖_M = 1
        let ax = pencil.apply(&x, 0.0);
        lambda = dot(&x, &ax);
        residual = ax
            .iter()
            .zip(&x)
            .zip(&pencil.mass)
            .map(|((a, v), m)| {
                let r = a - lambda * m * v;
                r * r / m
            })
            .sum::<f64>()
            .sqrt();
        guess = x.iter().map(|v| v / (lambda - sigma)).collect();
        if residual <= opts.tolerance {
            converged = true;
            break;
        }
    }
    let mut eigenvector = vec![0.0; ops.vertex_count()];
    for (l, &g) in pencil.interior.iter().enumerate() {
        eigenvector[g] = x[l];
    }
    Ok(SpectralReport { eigenvalue: lambda, residual, iterations, converged, shift: sigma, eigenvector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::GeneralizedCylinder;
    use crate::curvature::CurvatureSource;
    use crate::mesh::{build_mesh, DiscreteHypersurface};

    fn setup(n: usize, k: usize, r: f64, h: f64) -> (DiscreteHypersurface, WeightedOperators, SpectralReport) {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(n, k).unwrap(), r, h).unwrap();
        let ops = WeightedOperators::assemble_with_curvature(&mesh, CurvatureSource::Analytic).unwrap();
        let rep = lowest_dirichlet_eigenvalue(&ops).unwrap();
        (mesh, ops, rep)
    }

    fn report(n: usize, k: usize, r: f64, h: f64) -> (WeightedOperators, SpectralReport) {
        let (_, ops, rep) = setup(n, k, r, h);
        (ops, rep)
    }

    #[test]
    fn shrinker_sphere_is_unstable() {
        let (_, rep) = report(2, 2, 3.0, 0.2);
        assert!(rep.converged);
        assert!(rep.eigenvalue <= -1.0 + 1e-3, "{}", rep.eigenvalue);
    }

    #[test]
    fn small_plane_disk_is_stable() {
        let (_, rep) = report(2, 0, 0.8, 0.05);
        assert!(rep.converged);
        assert!(rep.eigenvalue > 0.0, "{}", rep.eigenvalue);
    }

    #[test]
    fn eigenvalue_decreases_with_the_domain() {
        let radii = [1.0, 1.5, 2.5];
        let values: Vec<f64> = radii.iter().map(|&r| report(2, 0, r, 0.1).1.eigenvalue).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    }

    #[test]
    fn eigenvalue_bounds_every_quotient() {
        let (mesh, ops, rep) = setup(1, 0, 4.0, 0.05);
        assert!(rep.converged);
        for width in [1.0, 2.0, 3.5] {
            let w: Vec<f64> = mesh.vertices().iter().map(|v| (width - v.norm()).max(0.0)).collect();
            assert!(rep.eigenvalue <= ops.rayleigh_quotient(&w).unwrap() + 1e-12);
        }
        assert!(rep.residual <= 1e-8);
    }
}
