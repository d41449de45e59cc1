//! Volume growth V(r) = |B_r ∩ Σ|, T(r) = ∫_{B_r∩Σ}|𝐇|², and the identities around them.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::CatalogPiece;
use crate::clip::{segment_ball_length, segment_sphere_points, PlanarTriangle};
use crate::curvature::{vertex_differential_data, CurvatureSource};
use crate::error::{Error, Result};
use crate::mesh::{to_dvector, DiscreteHypersurface};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub n: usize,
    pub radii: Vec<f64>,
    pub volume: Vec<f64>,
    pub h2: Vec<f64>,
    pub regular: Vec<bool>,
}

impl GrowthProfile {
    fn index_of(&self, r: f64) -> Result<usize> {
        self.radii
            .iter()
            .position(|x| (x - r).abs() <= 1e-12 * r.abs().max(1.0))
            .ok_or_else(|| Error::InvalidParameter(format!("radius {r} is not on the profile grid")))
    }

    /// `r,V,T,regular` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,V,T,regular\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{}", self.radii[i], self.volume[i], self.h2[i], self.regular[i]);
        }
        out
    }
}

fn check_radii(radii: &[f64], domain: f64) -> Result<()> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive and increasing".into()));
    }
    if let Some(&radius) = radii.iter().find(|r| **r > domain * (1.0 + 1e-12)) {
        return Err(Error::RadiusExceedsDomain { radius, domain });
    }
    Ok(())
}

/// Growth profile of a mesh piece, with exact ball clipping of every simplex.
pub fn growth_profile(mesh: &DiscreteHypersurface, radii: &[f64], source: CurvatureSource) -> Result<GrowthProfile> {
    check_radii(radii, mesh.domain_radius())?;
    let h2 = simplex_h2(mesh, source)?;
    let critical = critical_values(mesh);
    let h = mesh.max_edge_length();
    let rows: Vec<(f64, f64, bool)> = radii
        .par_iter()
        .map(|&r| {
            let (v, t) = (0..mesh.simplex_count())
                .map(|s| {
                    let a = simplex_ball_measure(mesh, s, r);
                    (a, a * h2[s])
                })
                .fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
            (v, t, is_regular(mesh, &critical, h, r))
        })
        .collect();
    Ok(GrowthProfile {
        n: mesh.dim(),
        radii: radii.to_vec(),
        volume: rows.iter().map(|r| r.0).collect(),
        h2: rows.iter().map(|r| r.1).collect(),
        regular: rows.iter().map(|r| r.2).collect(),
    })
}

/// Growth profile from exact radial integrals on a catalog piece.
pub fn growth_profile_analytic(piece: &CatalogPiece, radii: &[f64]) -> Result<GrowthProfile> {
    check_radii(radii, piece.radius())?;
    Ok(GrowthProfile {
        n: piece.n(),
        radii: radii.to_vec(),
        volume: radii.iter().map(|&r| piece.volume(r)).collect(),
        h2: radii.iter().map(|&r| piece.h2_integral(r)).collect(),
        regular: radii.iter().map(|&r| piece.is_regular(r)).collect(),
    })
}

/// V(r) of a mesh piece by exact clipping.
pub fn ball_volume(mesh: &DiscreteHypersurface, r: f64) -> f64 {
    (0..mesh.simplex_count()).map(|s| simplex_ball_measure(mesh, s, r)).sum()
}

fn simplex_points(mesh: &DiscreteHypersurface, s: usize) -> Vec<Vector3<f64>> {
    mesh.simplex(s).iter().map(|&v| mesh.vertices()[v]).collect()
}

fn simplex_ball_measure(mesh: &DiscreteHypersurface, s: usize, r: f64) -> f64 {
    let p = simplex_points(mesh, s);
    if mesh.dim() == 1 {
        segment_ball_length(&p[0], &p[1], r)
    } else {
        PlanarTriangle::new(&[p[0], p[1], p[2]]).ball_area(r)
    }
}

/// |𝐇|² per simplex: analytic at the lifted barycentre, or the mean of vertex estimates.
fn simplex_h2(mesh: &DiscreteHypersurface, source: CurvatureSource) -> Result<Vec<f64>> {
    let analytic = match source {
        CurvatureSource::Estimated => None,
        CurvatureSource::Analytic => Some(mesh.analytic_source().ok_or(Error::MissingCurvature)?),
        CurvatureSource::Auto => mesh.analytic_source(),
    };
    if let Some(shape) = analytic {
        return (0..mesh.simplex_count())
            .map(|s| {
                let p = simplex_points(mesh, s);
                let bary = p.iter().sum::<Vector3<f64>>() / p.len() as f64;
                let x = shape.project(&to_dvector(&bary, mesh.ambient_dim()));
                Ok(shape.differential_data(&x)?.mean_curvature.norm_squared())
            })
            .collect();
    }
    let data = vertex_differential_data(mesh, CurvatureSource::Estimated)?;
    Ok(mesh
        .simplices()
        .map(|idx| idx.iter().map(|&v| data[v].mean_curvature.norm_squared()).sum::<f64>() / idx.len() as f64)
        .collect())
}

/// Critical values of |x| on the piecewise-linear surface: interior minima inside simplices,
/// and vertices whose lower link is not a single arc (ties broken by index).
fn critical_values(mesh: &DiscreteHypersurface) -> Vec<f64> {
    let x = mesh.vertices();
    let mut out = Vec::new();
    for s in 0..mesh.simplex_count() {
        let p = simplex_points(mesh, s);
        if mesh.dim() == 1 {
            let d = p[1] - p[0];
            let t = -p[0].dot(&d) / d.norm_squared();
            if t > 0.0 && t < 1.0 {
                out.push((p[0] + d * t).norm());
            }
        } else {
            let tri = PlanarTriangle::new(&[p[0], p[1], p[2]]);
            if tri.foot_inside() {
                out.push(tri.offset);
            }
        }
    }
    if let Some(shape) = mesh.analytic_source() {
        if shape.is_centered() {
            out.push(shape.radius());
        }
    }
    let below = |a: usize, b: usize| (x[a].norm(), a) < (x[b].norm(), b);
    let boundary = mesh.boundary_vertices();
    if mesh.dim() == 1 {
        let mut nbrs = vec![Vec::new(); mesh.vertex_count()];
        for s in mesh.simplices() {
            nbrs[s[0]].push(s[1]);
            nbrs[s[1]].push(s[0]);
        }
        for (v, list) in nbrs.iter().enumerate() {
            if list.len() == 2 && !boundary[v] && below(list[0], v) == below(list[1], v) {
                out.push(x[v].norm());
            }
        }
        return out;
    }
    // oriented link edges around each interior vertex
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); mesh.vertex_count()];
    for s in mesh.simplices() {
        for i in 0..3 {
            link[s[i]].push((s[(i + 1) % 3], s[(i + 2) % 3]));
        }
    }
    for (v, edges) in link.iter().enumerate() {
        if boundary[v] || edges.is_empty() {
            continue;
        }
        let mut ring = vec![edges[0].0];
        let mut current = edges[0].1;
        while current != ring[0] && ring.len() <= edges.len() {
            ring.push(current);
            match edges.iter().find(|e| e.0 == current) {
                Some(e) => current = e.1,
                None => break,
            }
        }
        let lower: Vec<bool> = ring.iter().map(|&u| below(u, v)).collect();
        let changes = (0..lower.len()).filter(|&i| lower[i] != lower[(i + 1) % lower.len()]).count();
        if changes != 2 {
            out.push(x[v].norm());
        }
    }
    out
}

fn is_regular(mesh: &DiscreteHypersurface, critical: &[f64], h: f64, r: f64) -> bool {
    let near_critical = critical.iter().any(|c| (c - r).abs() < h);
    let on_vertex = mesh.vertices().iter().any(|v| (v.norm() - r).abs() <= 1e-9 * r);
    !near_critical && !on_vertex
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub r1: f64,
    pub r2: f64,
    pub slack: f64,
    pub pass: bool,
}

/// slack = V(r1)/r1ⁿ − (1 − 2n/r2²)·V(r2)/r2ⁿ; passes when slack ≥ −tol.
pub fn check_volume_growth(profile: &GrowthProfile, r1: f64, r2: f64, tol: f64) -> Result<GrowthCheck> {
    let n = profile.n as f64;
    let floor = (4.0 + 2.0 * n).sqrt();
    if r1 < floor {
        return Err(Error::Precondition(format!("r1 = {r1} is below sqrt(4 + 2n) = {floor}")));
    }
    if r2 <= r1 {
        return Err(Error::Precondition(format!("r2 = {r2} must exceed r1 = {r1}")));
    }
    let (i, j) = (profile.index_of(r1)?, profile.index_of(r2)?);
    let slack = profile.volume[i] / r1.powf(n) - (1.0 - 2.0 * n / (r2 * r2)) * profile.volume[j] / r2.powf(n);
    Ok(GrowthCheck { r1, r2, slack, pass: slack >= -tol })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H2Check {
    pub r: f64,
    pub t: f64,
    pub bound: f64,
    pub pass: bool,
}

/// T(r) ≤ (n/2)V(r) + tol·V(r) at every regular radius of the profile.
pub fn check_h2_bound(profile: &GrowthProfile, tol: f64) -> Vec<H2Check> {
    let half_n = profile.n as f64 / 2.0;
    (0..profile.radii.len())
        .filter(|&i| profile.regular[i])
        .map(|i| {
            let bound = half_n * profile.volume[i];
            let t = profile.h2[i];
            H2Check { r: profile.radii[i], t, bound, pass: t <= bound + tol * profile.volume[i] }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceCheck {
    pub r: f64,
    /// 2nV(r) − 4T(r).
    pub interior: f64,
    /// 2∫_{∂B_r∩Σ}|x^T|.
    pub slice: f64,
    /// |interior − slice| / max(|interior|, |slice|), or 0 when both vanish.
    pub residual: f64,
}

fn divergence_residual(r: f64, interior: f64, slice: f64) -> DivergenceCheck {
    let scale = interior.abs().max(slice.abs());
    let residual = if scale == 0.0 { 0.0 } else { (interior - slice).abs() / scale };
    DivergenceCheck { r, interior, slice, residual }
}

/// Both sides of 2nV(r) − 4T(r) = 2∫_{∂B_r∩Σ}|x^T| on a mesh.
pub fn divergence_identity_check(mesh: &DiscreteHypersurface, r: f64, source: CurvatureSource) -> Result<DivergenceCheck> {
    let profile = growth_profile(mesh, &[r], source)?;
    if !profile.regular[0] {
        return Err(Error::NonRegularRadius(r));
    }
    let n = mesh.dim() as f64;
    let interior = 2.0 * n * profile.volume[0] - 4.0 * profile.h2[0];
    Ok(divergence_residual(r, interior, 2.0 * slice_tangent_integral(mesh, r)))
}

/// Both sides of the divergence identity on a catalog piece.
pub fn divergence_identity_analytic(piece: &CatalogPiece, r: f64) -> Result<DivergenceCheck> {
    if r > piece.radius() {
        return Err(Error::RadiusExceedsDomain { radius: r, domain: piece.radius() });
    }
    if !piece.is_regular(r) {
        return Err(Error::NonRegularRadius(r));
    }
    let n = piece.n() as f64;
    let interior = 2.0 * n * piece.volume(r) - 4.0 * piece.h2_integral(r);
    Ok(divergence_residual(r, interior, 2.0 * piece.slice_tangent_integral(r)))
}

/// ∫_{∂B_r∩Σ}|x^T| on the flat simplices: on a triangle the slice is an arc of the circle of
/// in-plane radius ρ about the foot point, and |x^T| = ρ along it.
pub fn slice_tangent_integral(mesh: &DiscreteHypersurface, r: f64) -> f64 {
    (0..mesh.simplex_count())
        .map(|s| {
            let p = simplex_points(mesh, s);
            if mesh.dim() == 1 {
                let dir = (p[1] - p[0]).normalize();
                segment_sphere_points(&p[0], &p[1], r).iter().map(|x| x.dot(&dir).abs()).sum::<f64>()
            } else {
                let tri = PlanarTriangle::new(&[p[0], p[1], p[2]]);
                tri.slice_radius(r).map_or(0.0, |rho| rho * rho * tri.slice_angle(r))
            }
        })
        .sum()
}

/// V(r) by the coarea formula, V(r) = ∫_0^r ∫_{∂B_s∩Σ} |x|/|x^T| ds, integrated per simplex
/// between its critical radii. Independent of the direct clipping in [`growth_profile`].
pub fn coarea_volume(mesh: &DiscreteHypersurface, r: f64) -> f64 {
    let rule = GaussLegendre::new(8);
    (0..mesh.simplex_count())
        .into_par_iter()
        .map(|s| {
            let p = simplex_points(mesh, s);
            if mesh.dim() == 1 {
                // on a segment the slice is a point set and |x|/|x^T| is the inverse speed of |x|
                let dir = (p[1] - p[0]).normalize();
                let mut pts: Vec<f64> = vec![0.0, p[0].norm().min(r), p[1].norm().min(r)];
                let foot = p[0] - dir * p[0].dot(&dir);
                pts.push(foot.norm().min(r));
                pts.push(r);
                pts.sort_by(|a, b| a.total_cmp(b));
                pts.dedup();
                let mut total = 0.0;
                for w in pts.windows(2) {
                    total += rule.integrate(w[0], w[1], |s| {
                        segment_sphere_points(&p[0], &p[1], s).iter().map(|x| s / x.dot(&dir).abs()).sum::<f64>()
                    });
                }
                total
            } else {
                // on a triangle, |x|/|x^T|·(arc length) = s·θ(s)
                let tri = PlanarTriangle::new(&[p[0], p[1], p[2]]);
                let mut pts: Vec<f64> = tri.critical_radii().into_iter().map(|c| c.min(r)).collect();
                pts.push(0.0);
                pts.push(r);
                pts.sort_by(|a, b| a.total_cmp(b));
                pts.dedup();
                let mut total = 0.0;
                for w in pts.windows(2) {
                    total += rule.integrate(w[0], w[1], |s| s * tri.slice_angle(s));
                }
                total
            }
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::GeneralizedCylinder;
    use crate::mesh::build_mesh;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn mesh(n: usize, k: usize, r: f64, h: f64) -> DiscreteHypersurface {
        build_mesh(&GeneralizedCylinder::shrinker(n, k).unwrap(), r, h).unwrap()
    }

    #[test]
    fn plane_profile_has_constant_density() {
        let m = mesh(2, 0, 6.0, 0.1);
        let p = growth_profile(&m, &[2.0, 3.0, 5.0], CurvatureSource::Analytic).unwrap();
        for (r, v) in p.radii.iter().zip(&p.volume) {
            assert_relative_eq!(v / (r * r), PI, max_relative = 2e-3);
        }
        assert!(p.h2.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn shrinker_sphere_saturates_the_h2_bound() {
        let m = mesh(2, 2, 5.0, 0.2);
        let p = growth_profile(&m, &[3.0, 4.0], CurvatureSource::Analytic).unwrap();
        for c in check_h2_bound(&p, 1e-6) {
            assert!(c.pass);
            assert_relative_eq!(c.t, c.bound, max_relative = 1e-6);
        }
    }

    #[test]
    fn volume_growth_examples() {
        let plane = CatalogPiece::new(GeneralizedCylinder::shrinker(2, 0).unwrap(), 6.0).unwrap();
        let p = growth_profile_analytic(&plane, &[3.0, 6.0]).unwrap();
        let c = check_volume_growth(&p, 3.0, 6.0, 1e-10).unwrap();
        assert_relative_eq!(c.slack, PI * 4.0 / 36.0, max_relative = 1e-12);
        let sphere = CatalogPiece::new(GeneralizedCylinder::shrinker(2, 2).unwrap(), 6.0).unwrap();
        let p = growth_profile_analytic(&sphere, &[2.0, 3.0, 6.0]).unwrap();
        let c = check_volume_growth(&p, 3.0, 6.0, 1e-10).unwrap();
        assert_relative_eq!(c.slack, 16.0 * PI * (1.0 / 9.0 - (1.0 - 1.0 / 9.0) / 36.0), max_relative = 1e-12);
        assert!(matches!(check_volume_growth(&p, 2.0, 6.0, 1e-10), Err(Error::Precondition(_))));
    }

    #[test]
    fn cylinder_volume_two_ways() {
        let m = mesh(2, 1, 5.0, 0.1);
        let direct = growth_profile(&m, &[4.0], CurvatureSource::Analytic).unwrap().volume[0];
        let coarea = coarea_volume(&m, 4.0);
        assert!((direct - coarea).abs() <= 1e-3 * direct, "{direct} vs {coarea}");
    }

    #[test]
    fn line_volume_two_ways() {
        let m = mesh(1, 0, 5.0, 0.1);
        assert_relative_eq!(coarea_volume(&m, 3.3), 6.6, max_relative = 1e-9);
    }

    #[test]
    fn divergence_identity_on_cylinder_converges() {
        let coarse = divergence_identity_check(&mesh(2, 1, 5.0, 0.1), 4.0, CurvatureSource::Analytic).unwrap();
        let fine = divergence_identity_check(&mesh(2, 1, 5.0, 0.05), 4.0, CurvatureSource::Analytic).unwrap();
        assert!(fine.residual <= 0.02, "{fine:?}");
        assert!(fine.residual <= 0.6 * coarse.residual, "{coarse:?} {fine:?}");
    }

    #[test]
    fn divergence_identity_is_exact_analytically() {
        let plane = CatalogPiece::new(GeneralizedCylinder::shrinker(2, 0).unwrap(), 6.0).unwrap();
        let c = divergence_identity_analytic(&plane, 3.0).unwrap();
        assert_relative_eq!(c.interior, 36.0 * PI, max_relative = 1e-12);
        assert!(c.residual <= 1e-10);
        let sphere = CatalogPiece::new(GeneralizedCylinder::shrinker(3, 3).unwrap(), 6.0).unwrap();
        let c = divergence_identity_analytic(&sphere, 4.0).unwrap();
        assert!(c.interior.abs() <= 1e-10 * sphere.volume(4.0) && c.slice == 0.0);
    }

    #[test]
    fn regular_flags_avoid_the_waist() {
        let m = mesh(2, 1, 5.0, 0.1);
        let p = growth_profile(&m, &[1.45, 3.0], CurvatureSource::Analytic).unwrap();
        assert_eq!(p.regular, vec![false, true]);
        assert!(matches!(divergence_identity_check(&m, 1.45, CurvatureSource::Analytic), Err(Error::NonRegularRadius(_))));
    }

    #[test]
    fn radius_beyond_domain_is_rejected() {
        let m = mesh(1, 0, 3.0, 0.1);
        assert!(matches!(growth_profile(&m, &[4.0], CurvatureSource::Auto), Err(Error::RadiusExceedsDomain { .. })));
    }
}
