//! Exact radial integrals over B_R ∩ Σ for centered generalized cylinders of any dimension.
//!
//! On S^k_ρ × R^m the norm splits as |x|² = ρ² + t² with t = |x_E| = |x^T|, so every
//! radial integral reduces to |S^k_ρ|·|S^{m−1}|·∫ g(√(ρ²+t²), t) t^{m−1} dt.

use std::f64::consts::PI;

use crate::catalog::GeneralizedCylinder;
use crate::error::{Error, Result};
use crate::quadrature::{breakpoints, sphere_area, GaussLegendre};

const ORDER: usize = 20;

#[derive(Debug, Clone)]
pub struct CatalogPiece {
    shape: GeneralizedCylinder,
    radius: f64,
    rule: GaussLegendre,
}

impl CatalogPiece {
    pub fn new(shape: GeneralizedCylinder, radius: f64) -> Result<Self> {
        if !shape.is_centered() {
            return Err(Error::InvalidParameter("analytic pieces need a centered shape".into()));
        }
        if !(radius > shape.radius()) && !(shape.k() == 0 && radius > 0.0) {
            return Err(Error::RadiusTooSmall { radius, needed: shape.radius() });
        }
        Ok(Self { shape, radius, rule: GaussLegendre::new(ORDER) })
    }

    pub fn shape(&self) -> &GeneralizedCylinder {
        &self.shape
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn k(&self) -> usize {
        self.shape.k()
    }

    fn euclid_dim(&self) -> usize {
        self.shape.n() - self.shape.k()
    }

    fn sphere_measure(&self) -> f64 {
        if self.shape.k() == 0 {
            1.0
        } else {
            sphere_area(self.shape.k(), self.shape.radius())
        }
    }

    /// |A|², constant on the shape.
    pub fn norm_a_sq(&self) -> f64 {
        let rho = self.shape.radius();
        if self.shape.k() == 0 {
            0.0
        } else {
            self.shape.k() as f64 / (rho * rho)
        }
    }

    /// |𝐇|², constant on the shape.
    pub fn mean_curvature_sq(&self) -> f64 {
        let rho = self.shape.radius();
        if self.shape.k() == 0 {
            0.0
        } else {
            let k = self.shape.k() as f64;
            k * k / (rho * rho)
        }
    }

    /// Half-width of the Euclidean factor inside B_r, or None when B_r misses the shape.
    fn slice_half_width(&self, r: f64) -> Option<f64> {
        let rho = self.shape.radius();
        (r >= rho).then(|| (r * r - rho * rho).max(0.0).sqrt())
    }

    /// ∫_{B_r ∩ Σ} g(|x|, |x^T|).
    pub fn radial_integral<G: Fn(f64, f64) -> f64>(&self, r: f64, g: G) -> f64 {
        self.shell_integral(0.0, r, g)
    }

    /// ∫ g(|x|, |x^T|) over the part of Σ with lo < |x| ≤ hi.
    pub fn shell_integral<G: Fn(f64, f64) -> f64>(&self, lo: f64, hi: f64, g: G) -> f64 {
        let rho = self.shape.radius();
        let m = self.euclid_dim();
        let Some(t_hi) = self.slice_half_width(hi) else { return 0.0 };
        if m == 0 {
            return if lo < rho { self.sphere_measure() * g(rho, 0.0) } else { 0.0 };
        }
        let t_lo = self.slice_half_width(lo).unwrap_or(0.0);
        if t_hi <= t_lo {
            return 0.0;
        }
        let panels = (((t_hi - t_lo) / 0.5).ceil() as usize).max(2);
        let pts = breakpoints(t_lo, t_hi, []);
        let radial = self.rule.composite(&pts, panels, |t| g((rho * rho + t * t).sqrt(), t) * t.powi(m as i32 - 1));
        self.sphere_measure() * sphere_area(m - 1, 1.0) * radial
    }

    /// ∫_{∂B_r ∩ Σ} g(|x^T|): the slice is S^k_ρ × S^{m−1}_t.
    pub fn slice_integral<G: Fn(f64) -> f64>(&self, r: f64, g: G) -> f64 {
        let m = self.euclid_dim();
        match self.slice_half_width(r) {
            Some(t) if m > 0 && t > 0.0 => self.sphere_measure() * sphere_area(m - 1, t) * g(t),
            _ => 0.0,
        }
    }

    /// F(B_R ∩ Σ).
    pub fn gaussian_area(&self) -> f64 {
        let n = self.n() as f64;
        (4.0 * PI).powf(-n / 2.0) * self.radial_integral(self.radius, |s, _| (-s * s / 4.0).exp())
    }

    /// V(r) = |B_r ∩ Σ|.
    pub fn volume(&self, r: f64) -> f64 {
        self.radial_integral(r, |_, _| 1.0)
    }

    /// T(r) = ∫_{B_r ∩ Σ} |𝐇|².
    pub fn h2_integral(&self, r: f64) -> f64 {
        self.mean_curvature_sq() * self.volume(r)
    }

    /// ∫_{∂B_r ∩ Σ} |x^T|.
    pub fn slice_tangent_integral(&self, r: f64) -> f64 {
        self.slice_integral(r, |t| t)
    }

    /// A radius is critical for |x| on the shape only at the sphere-factor radius.
    pub fn is_regular(&self, r: f64) -> bool {
        self.euclid_dim() == 0 || (r - self.shape.radius()).abs() > 1e-9 * r.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn piece(n: usize, k: usize, r: f64) -> CatalogPiece {
        CatalogPiece::new(GeneralizedCylinder::shrinker(n, k).unwrap(), r).unwrap()
    }

    #[test]
    fn plane_has_unit_gaussian_area() {
        for n in 1..=4 {
            assert_relative_eq!(piece(n, 0, 14.0).gaussian_area(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_areas() {
        let circle = (4.0 * PI).powf(-0.5) * 2.0 * PI * 2f64.sqrt() * (-0.5f64).exp();
        assert_relative_eq!(piece(1, 1, 3.0).gaussian_area(), circle, max_relative = 1e-14);
        assert_relative_eq!(piece(2, 2, 3.0).gaussian_area(), 4.0 / std::f64::consts::E, max_relative = 1e-14);
    }

    #[test]
    fn every_shrinker_has_the_same_area_as_its_sphere_factor() {
        // the plane factor integrates to one, so F(S^k × R^{n−k}) = F(S^k)
        for n in 1..=4 {
            for k in 1..=n {
                assert_relative_eq!(piece(n, k, 16.0).gaussian_area(), piece(k, k, 16.0).gaussian_area(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn plane_volume_and_slice() {
        let p = piece(2, 0, 10.0);
        assert_relative_eq!(p.volume(3.0), 9.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(p.slice_tangent_integral(3.0), 3.0 * 6.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn cylinder_volume_matches_closed_form() {
        let p = piece(2, 1, 10.0);
        let v = 2.0 * PI * 2f64.sqrt() * 2.0 * 14f64.sqrt();
        assert_relative_eq!(p.volume(4.0), v, max_relative = 1e-13);
        assert_relative_eq!(p.mean_curvature_sq(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn rejects_offset_shapes_and_small_balls() {
        assert!(CatalogPiece::new(GeneralizedCylinder::shrinker(2, 2).unwrap(), 1.0).is_err());
        let moved = GeneralizedCylinder::shrinker(1, 1).unwrap().translated(&nalgebra::DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(CatalogPiece::new(moved, 5.0).is_err());
    }
}
