//! The Gaussian area F.

use std::f64::consts::PI;

use crate::mesh::DiscreteHypersurface;

/// e^{−|x|²/4} from |x|².
#[inline]
pub fn gaussian_weight(norm_sq: f64) -> f64 {
    (-norm_sq / 4.0).exp()
}

/// (4π)^{−n/2}.
pub fn normalization(n: usize) -> f64 {
    (4.0 * PI).powf(-(n as f64) / 2.0)
}

/// F = (4π)^{−n/2} ∫ e^{−|x|²/4} by the mesh's quadrature.
pub fn gaussian_area(mesh: &DiscreteHypersurface) -> f64 {
    let sum: f64 = mesh.all_quadrature().iter().map(|q| q.weight * gaussian_weight(q.point.norm_squared())).sum();
    normalization(mesh.dim()) * sum
}
