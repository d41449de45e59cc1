//! Shrinker-equation residual statistics over a mesh.

use serde::Serialize;

use crate::curvature::{vertex_differential_data, CurvatureSource};
use crate::error::{Error, Result};
use crate::functional::gaussian_weight;
use crate::mesh::{to_dvector, DiscreteHypersurface};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    /// sqrt(∫ r² e^{−|x|²/4} / ∫ e^{−|x|²/4}).
    pub weighted_l2: f64,
    pub samples: usize,
}

/// ‖𝐇 − s·x^⊥/2‖ over the mesh. Analytic data is evaluated at the (lifted) quadrature
/// points; estimated data at vertices with lumped weights.
pub fn shrinker_residual(mesh: &DiscreteHypersurface, source: CurvatureSource) -> Result<ResidualStats> {
    let use_analytic = match source {
        CurvatureSource::Estimated => false,
        CurvatureSource::Analytic => {
            mesh.analytic_source().ok_or(Error::MissingCurvature)?;
            true
        }
        CurvatureSource::Auto => mesh.analytic_source().is_some(),
    };
    let samples: Vec<(f64, f64)> = if use_analytic {
        let shape = mesh.analytic_source().expect("checked above");
        mesh.all_quadrature()
            .iter()
            .map(|q| {
                let x = shape.project(&to_dvector(&q.point, mesh.ambient_dim()));
                let r = shape.differential_data(&x)?.shrinker_residual();
                Ok((r, q.weight * gaussian_weight(x.norm_squared())))
            })
            .collect::<Result<_>>()?
    } else {
        let data = vertex_differential_data(mesh, CurvatureSource::Estimated)?;
        let lumped = mesh.lumped_volumes();
        data.iter()
            .zip(&lumped)
            .map(|(d, m)| (d.shrinker_residual(), m * gaussian_weight(d.point.norm_squared())))
            .collect()
    };
    let max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let sq: f64 = samples.iter().map(|(r, w)| r * r * w).sum();
    let weighted_l2 = if total > 0.0 { (sq / total).sqrt() } else { 0.0 };
    Ok(ResidualStats { max, weighted_l2, samples: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::GeneralizedCylinder;
    use crate::mesh::build_mesh;

    #[test]
    fn catalog_meshes_have_exact_residual() {
        for (n, k) in [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)] {
            let mesh = build_mesh(&GeneralizedCylinder::shrinker(n, k).unwrap(), 4.0, 0.3).unwrap();
            let stats = shrinker_residual(&mesh, CurvatureSource::Analytic).unwrap();
            assert!(stats.max <= 1e-12, "n={n} k={k}: {}", stats.max);
        }
    }

    #[test]
    fn non_shrinker_sphere_residual() {
        let shape = GeneralizedCylinder::with_radius(2, 2, 2.1).unwrap();
        let mesh = build_mesh(&shape, 3.0, 0.3).unwrap();
        let stats = shrinker_residual(&mesh, CurvatureSource::Analytic).unwrap();
        assert!((stats.max - (2.0 / 2.1 - 1.05f64).abs()).abs() < 1e-12);
    }

    #[test]
    fn estimated_residual_converges_at_second_order() {
        let shape = GeneralizedCylinder::shrinker(2, 2).unwrap();
        let coarse = shrinker_residual(&build_mesh(&shape, 3.0, 0.4).unwrap(), CurvatureSource::Estimated).unwrap();
        let fine = shrinker_residual(&build_mesh(&shape, 3.0, 0.2).unwrap(), CurvatureSource::Estimated).unwrap();
        let ratio = coarse.max / fine.max;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
