//! Weighted P1 finite elements for the drift Laplacian 𝓛 and the stability operator
//! L = 𝓛 + |A|² + ½ on codimension-one meshes.
//!
//! K is the weighted stiffness matrix Σ_T ω_T ∇λ_i·∇λ_j with ω_T = ∫_T e^{−|x|²/4}, and M
//! is the lumped weighted mass. Then 𝓛 = −M⁻¹K, which is self-adjoint for ⟨u, v⟩_w = uᵀMv.

use nalgebra::{DMatrix, Vector3};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::curvature::{vertex_differential_data, CurvatureSource};
use crate::error::{Error, Result};
use crate::functional::gaussian_weight;
use crate::mesh::DiscreteHypersurface;

#[derive(Debug, Clone)]
pub struct WeightedOperators {
    stiffness: CsrMatrix<f64>,
    mass: Vec<f64>,
    /// |A|² + ½ per vertex, when curvature is known.
    potential: Option<Vec<f64>>,
    boundary: Vec<bool>,
}

/// Gradients of the barycentric coordinates of a simplex, one per vertex.
pub fn barycentric_gradients(p: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let edges: Vec<Vector3<f64>> = p[1..].iter().map(|q| q - p[0]).collect();
    let n = edges.len();
    let gram = DMatrix::from_fn(n, n, |i, j| edges[i].dot(&edges[j]));
    let inv = gram.try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n));
    let mut grads = vec![Vector3::zeros(); n + 1];
    for j in 0..n {
        let mut g = Vector3::zeros();
        for (i, e) in edges.iter().enumerate() {
            g += e * inv[(i, j)];
        }
        grads[j + 1] = g;
        grads[0] -= g;
    }
    grads
}

impl WeightedOperators {
    /// Stiffness and mass only; the stability operator then reports missing curvature.
    pub fn assemble(mesh: &DiscreteHypersurface) -> Self {
        let nv = mesh.vertex_count();
        let per_simplex: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)> = (0..mesh.simplex_count())
            .into_par_iter()
            .map(|s| {
                let idx = mesh.simplex(s);
                let p: Vec<Vector3<f64>> = idx.iter().map(|&v| mesh.vertices()[v]).collect();
                let grads = barycentric_gradients(&p);
                let quad = mesh.quadrature(s);
                let omega: f64 = quad.iter().map(|q| q.weight * gaussian_weight(q.point.norm_squared())).sum();
                let mut k = Vec::with_capacity(idx.len() * idx.len());
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        k.push((i, j, omega * grads[a].dot(&grads[b])));
                    }
                }
                let mut m = Vec::with_capacity(idx.len());
                for (a, &i) in idx.iter().enumerate() {
                    let share: f64 =
                        quad.iter().map(|q| q.weight * gaussian_weight(q.point.norm_squared()) * q.barycentric[a]).sum();
                    m.push((i, share));
                }
                (k, m)
            })
            .collect();
        let mut coo = CooMatrix::new(nv, nv);
        let mut mass = vec![0.0; nv];
        for (k, m) in per_simplex {
            for (i, j, v) in k {
                coo.push(i, j, v);
            }
            for (i, v) in m {
                mass[i] += v;
            }
        }
        Self {
            stiffness: CsrMatrix::from(&coo),
            mass,
            potential: None,
            boundary: mesh.boundary_vertices().to_vec(),
        }
    }

    /// Stiffness, mass, and the potential |A|² + ½ from the requested curvature source.
    pub fn assemble_with_curvature(mesh: &DiscreteHypersurface, source: CurvatureSource) -> Result<Self> {
        let data = vertex_differential_data(mesh, source)?;
        let mut ops = Self::assemble(mesh);
        ops.potential = Some(data.iter().map(|d| d.norm_a_sq + 0.5).collect());
        Ok(ops)
    }

    pub fn vertex_count(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.potential.as_deref()
    }

    pub fn boundary(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.vertex_count() {
            return Err(Error::FieldLength { expected: self.vertex_count(), got: w.len() });
        }
        Ok(())
    }

    /// Kw.
    pub fn stiffness_apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        for (i, row) in self.stiffness.row_iter().enumerate() {
            out[i] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * w[j]).sum();
        }
        out
    }

    /// ⟨∇u, ∇v⟩_w = uᵀKv.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness_apply(v).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// ⟨u, v⟩_w = Σ M_i u_i v_i.
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(v)).map(|(m, (a, b))| m * a * b).sum()
    }

    /// 𝓛w = −M⁻¹Kw.
    pub fn drift_laplacian(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w)?;
        if let Some((vertex, &mass)) = self.mass.iter().enumerate().find(|(_, m)| **m <= 0.0) {
            return Err(Error::SingularMass { vertex, mass });
        }
        Ok(self.stiffness_apply(w).iter().zip(&self.mass).map(|(k, m)| -k / m).collect())
    }

    /// Lw = 𝓛w + (|A|² + ½)w.
    pub fn stability(&self, w: &[f64]) -> Result<Vec<f64>> {
        let potential = self.potential.as_ref().ok_or(Error::MissingCurvature)?;
        let mut out = self.drift_laplacian(w)?;
        for ((o, p), x) in out.iter_mut().zip(potential).zip(w) {
            *o += p * x;
        }
        Ok(out)
    }

    /// Q(w) = [⟨∇w,∇w⟩_w − ⟨(|A|²+½)w, w⟩_w] / ⟨w, w⟩_w for Dirichlet w.
    pub fn rayleigh_quotient(&self, w: &[f64]) -> Result<f64> {
        self.check_len(w)?;
        let potential = self.potential.as_ref().ok_or(Error::MissingCurvature)?;
        if let Some(vertex) = (0..w.len()).find(|&i| self.boundary[i] && w[i] != 0.0) {
            return Err(Error::NotDirichlet { vertex });
        }
        let mass = self.mass_inner(w, w);
        if w.iter().all(|x| *x == 0.0) || mass <= 0.0 {
            return Err(Error::ZeroField);
        }
        let pot: f64 = self.mass.iter().zip(potential).zip(w).map(|((m, p), x)| m * p * x * x).sum();
        Ok((self.dirichlet_form(w, w) - pot) / mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::GeneralizedCylinder;
    use crate::mesh::build_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(n: usize, k: usize, r: f64, h: f64) -> (DiscreteHypersurface, WeightedOperators) {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(n, k).unwrap(), r, h).unwrap();
        let ops = WeightedOperators::assemble_with_curvature(&mesh, CurvatureSource::Analytic).unwrap();
        (mesh, ops)
    }

    fn dirichlet_random(ops: &WeightedOperators, rng: &mut ChaCha8Rng) -> Vec<f64> {
        ops.boundary().iter().map(|b| if *b { 0.0 } else { rng.random_range(-1.0..1.0) }).collect()
    }

    #[test]
    fn constants_are_harmonic() {
        let (_, ops) = ops(2, 1, 4.0, 0.3);
        let lw = ops.drift_laplacian(&vec![3.0; ops.vertex_count()]).unwrap();
        assert!(lw.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn norm_squared_on_shrinker_sphere() {
        let (mesh, ops) = ops(2, 2, 3.0, 0.3);
        let w: Vec<f64> = mesh.vertices().iter().map(|v| v.norm_squared()).collect();
        assert!(ops.drift_laplacian(&w).unwrap().iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn norm_squared_on_line() {
        let (mesh, ops) = ops(1, 0, 5.0, 0.01);
        let w: Vec<f64> = mesh.vertices().iter().map(|v| v.norm_squared()).collect();
        let lw = ops.drift_laplacian(&w).unwrap();
        let at_one = mesh.vertices().iter().position(|v| (v.norm() - 1.0).abs() < 1e-9).unwrap();
        assert!((lw[at_one] - 1.0).abs() < 1e-3, "{}", lw[at_one]);
    }

    #[test]
    fn integration_by_parts_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, ops) = ops(2, 1, 4.0, 0.3);
        let u = dirichlet_random(&ops, &mut rng);
        let v = dirichlet_random(&ops, &mut rng);
        let lu = ops.drift_laplacian(&u).unwrap();
        let lhs = ops.mass_inner(&lu, &v);
        let rhs = ops.dirichlet_form(&u, &v);
        assert!((lhs + rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn stability_of_constants() {
        let (_, plane) = ops(2, 0, 3.0, 0.3);
        let one = vec![1.0; plane.vertex_count()];
        let lw = plane.stability(&one).unwrap();
        for (i, x) in lw.iter().enumerate() {
            if !plane.boundary()[i] {
                assert!((x - 0.5).abs() < 1e-12);
            }
        }
        let (_, sphere) = ops(2, 2, 3.0, 0.3);
        let one = vec![1.0; sphere.vertex_count()];
        assert!(sphere.stability(&one).unwrap().iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!((sphere.rayleigh_quotient(&one).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_matches_operator_and_is_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, ops) = ops(2, 1, 4.0, 0.3);
        let w = dirichlet_random(&ops, &mut rng);
        let q = ops.rayleigh_quotient(&w).unwrap();
        let lw = ops.stability(&w).unwrap();
        let via_operator = -ops.mass_inner(&w, &lw) / ops.mass_inner(&w, &w);
        assert!((q - via_operator).abs() <= 1e-10 * q.abs().max(1.0));
        let scaled: Vec<f64> = w.iter().map(|x| -7.5 * x).collect();
        assert!((ops.rayleigh_quotient(&scaled).unwrap() - q).abs() <= 1e-12 * q.abs().max(1.0));
    }

    #[test]
    fn single_vertex_bump_is_stable() {
        let (mesh, ops) = ops(2, 0, 3.0, 0.2);
        let center = (0..mesh.vertex_count()).min_by(|&a, &b| mesh.vertices()[a].norm().total_cmp(&mesh.vertices()[b].norm())).unwrap();
        let mut w = vec![0.0; ops.vertex_count()];
        w[center] = 1.0;
        assert!(ops.rayleigh_quotient(&w).unwrap() > 0.0);
    }

    #[test]
    fn quotient_errors() {
        let (_, ops) = ops(2, 0, 3.0, 0.3);
        assert_eq!(ops.rayleigh_quotient(&vec![0.0; ops.vertex_count()]), Err(Error::ZeroField));
        let boundary = ops.boundary().iter().position(|b| *b).unwrap();
        let mut w = vec![0.0; ops.vertex_count()];
        w[boundary] = 1.0;
        assert_eq!(ops.rayleigh_quotient(&w), Err(Error::NotDirichlet { vertex: boundary }));
        assert!(matches!(ops.rayleigh_quotient(&[1.0]), Err(Error::FieldLength { .. })));
        let bare = WeightedOperators::assemble(&build_mesh(&GeneralizedCylinder::shrinker(1, 0).unwrap(), 2.0, 0.5).unwrap());
        assert_eq!(bare.stability(&vec![1.0; bare.vertex_count()]), Err(Error::MissingCurvature));
    }
}
