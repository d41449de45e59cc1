//! The coordinate normal fields v_i = e_i^⊥ on catalog shapes, in any codimension.
//!
//! The normal frame of a generalized cylinder is parallel, so Lv_i is computed from its
//! components c = ⟨e_i, ν_α⟩, each the restriction of an affine function ⟨a, x⟩ + b:
//! 𝓛c = ⟨a, 𝐇⟩ − ½⟨a, x^T⟩ and ⟨A_jk, v⟩A_jk = Σ_β tr(A^α A^β) c_β ν_α.

use nalgebra::DVector;
use serde::Serialize;

use crate::catalog::{DifferentialData, GeneralizedCylinder};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateFieldReport {
    pub points: usize,
    pub codimension: usize,
    /// max |Σ_i |v_i|² − (N − n)|.
    pub max_sum_defect: f64,
    /// max_i ‖Lv_i − ½v_i‖.
    pub max_eigen_defect: f64,
}

/// v_i and Lv_i at one point, for i = 1..N.
pub fn coordinate_fields(shape: &GeneralizedCylinder, data: &DifferentialData) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let dim = shape.ambient_dim();
    let g = shape.radial_normal_map();
    let normals = &data.normal_frame;
    let forms = &data.second_fundamental;
    let mut fields = Vec::with_capacity(dim);
    let mut images = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        let c: Vec<f64> = normals.iter().map(|nu| nu.dot(&e)).collect();
        let mut v = DVector::zeros(dim);
        let mut lv = DVector::zeros(dim);
        for (alpha, nu) in normals.iter().enumerate() {
            v += nu * c[alpha];
            // only the radial normal (α = 0) varies along the shape
            let drift = if alpha == 0 {
                let a = g.column(i).into_owned();
                a.dot(&data.mean_curvature) - 0.5 * a.dot(&data.x_tangent)
            } else {
                0.0
            };
            let curvature: f64 = (0..normals.len()).map(|beta| (&forms[alpha] * &forms[beta]).trace() * c[beta]).sum();
            lv += nu * (drift + curvature + 0.5 * c[alpha]);
        }
        fields.push(v);
        images.push(lv);
    }
    (fields, images)
}

pub fn check_coordinate_fields(shape: &GeneralizedCylinder, points: &[DVector<f64>]) -> Result<CoordinateFieldReport> {
    let target = shape.codimension() as f64;
    let mut max_sum_defect: f64 = 0.0;
    let mut max_eigen_defect: f64 = 0.0;
    for p in points {
        let data = shape.differential_data(p)?;
        let (fields, images) = coordinate_fields(shape, &data);
        let sum: f64 = fields.iter().map(|v| v.norm_squared()).sum();
        max_sum_defect = max_sum_defect.max((sum - target).abs());
        for (v, lv) in fields.iter().zip(&images) {
            max_eigen_defect = max_eigen_defect.max((lv - v * 0.5).norm());
        }
    }
    Ok(CoordinateFieldReport { points: points.len(), codimension: shape.codimension(), max_sum_defect, max_eigen_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::random_rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples(shape: &GeneralizedCylinder, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| shape.sample(&mut rng, 6.0).unwrap()).collect()
    }

    #[test]
    fn hyperplane_fields() {
        let plane = GeneralizedCylinder::shrinker(2, 0).unwrap();
        let pts = samples(&plane, 20, 1);
        let data = plane.differential_data(&pts[0]).unwrap();
        let (fields, _) = coordinate_fields(&plane, &data);
        assert_eq!(fields.iter().filter(|v| v.norm() > 1e-14).count(), 1);
        let report = check_coordinate_fields(&plane, &pts).unwrap();
        assert!(report.max_sum_defect < 1e-12 && report.max_eigen_defect < 1e-12);
    }

    #[test]
    fn cylinders_and_spheres_satisfy_the_eigen_relation() {
        for (n, k) in [(2, 1), (2, 2), (3, 1), (3, 3)] {
            let shape = GeneralizedCylinder::shrinker(n, k).unwrap();
            let report = check_coordinate_fields(&shape, &samples(&shape, 50, 2)).unwrap();
            assert!(report.max_sum_defect < 1e-10 && report.max_eigen_defect < 1e-10, "{n} {k}: {report:?}");
        }
    }

    #[test]
    fn higher_codimension_after_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_rotation(&mut rng, 5);
        let shape = GeneralizedCylinder::shrinker_in(3, 2, 5).unwrap().rotated(&q).unwrap();
        let report = check_coordinate_fields(&shape, &samples(&shape, 100, 3)).unwrap();
        assert_eq!(report.codimension, 2);
        assert!(report.max_sum_defect < 1e-10 && report.max_eigen_defect < 1e-10, "{report:?}");
    }

    #[test]
    fn translated_sphere_breaks_the_relation() {
        let shift = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let shape = GeneralizedCylinder::shrinker(2, 2).unwrap().translated(&shift).unwrap();
        let report = check_coordinate_fields(&shape, &samples(&shape, 10, 4)).unwrap();
        assert!(report.max_eigen_defect > 1e-3);
    }
}
