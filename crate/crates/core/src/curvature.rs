//! Per-vertex differential data: exact on catalog meshes, estimated otherwise.
//!
//! Polylines use the turning angle over the dual length. Triangle meshes fit a cubic
//! height function over the two-ring of each vertex.

use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use rayon::prelude::*;

use crate::catalog::DifferentialData;
use crate::error::{Error, Result};
use crate::mesh::{to_dvector, DiscreteHypersurface};

/// Where per-vertex curvature comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvatureSource {
    /// Analytic data of the catalog shape when the mesh has one, estimates otherwise.
    #[default]
    Auto,
    Analytic,
    Estimated,
}

/// Differential data at every vertex.
pub fn vertex_differential_data(mesh: &DiscreteHypersurface, source: CurvatureSource) -> Result<Vec<DifferentialData>> {
    match (source, mesh.analytic_source()) {
        (CurvatureSource::Analytic | CurvatureSource::Auto, Some(shape)) => (0..mesh.vertex_count())
            .into_par_iter()
            .map(|v| shape.differential_data(&shape.project(&mesh.point(v))))
            .collect(),
        (CurvatureSource::Analytic, None) => Err(Error::MissingCurvature),
        _ => estimate_differential_data(mesh),
    }
}

/// Discrete normal and curvature estimates at every vertex.
pub fn estimate_differential_data(mesh: &DiscreteHypersurface) -> Result<Vec<DifferentialData>> {
    match mesh.dim() {
        1 => estimate_curve(mesh),
        2 => estimate_surface(mesh),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

fn estimate_curve(mesh: &DiscreteHypersurface) -> Result<Vec<DifferentialData>> {
    let nv = mesh.vertex_count();
    let mut prev = vec![None; nv];
    let mut next = vec![None; nv];
    for s in mesh.simplices() {
        next[s[0]] = Some(s[1]);
        prev[s[1]] = Some(s[0]);
    }
    let x = mesh.vertices();
    // signed curvature at vertices with both neighbours
    let kappa: Vec<Option<f64>> = (0..nv)
        .map(|v| {
            let (a, b) = (prev[v]?, next[v]?);
            let t_in = x[v] - x[a];
            let t_out = x[b] - x[v];
            let turn = (t_in.x * t_out.y - t_in.y * t_out.x).atan2(t_in.dot(&t_out));
            Some(turn / (0.5 * (t_in.norm() + t_out.norm())))
        })
        .collect();

    (0..nv)
        .map(|v| {
            let t_in = prev[v].map(|a| (x[v] - x[a]).normalize());
            let t_out = next[v].map(|b| (x[b] - x[v]).normalize());
            let tangent = match (t_in, t_out) {
                (Some(a), Some(b)) => (a + b).normalize(),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => return Err(Error::DegenerateStar { vertex: v, incident: 0 }),
            };
            // endpoints borrow the curvature of their only neighbour
            let k = kappa[v]
                .or_else(|| next[v].and_then(|b| kappa[b]))
                .or_else(|| prev[v].and_then(|a| kappa[a]))
                .unwrap_or(0.0);
            let normal = Vector3::new(tangent.y, -tangent.x, 0.0);
            Ok(DifferentialData::assemble(
                to_dvector(&x[v], 2),
                vec![to_dvector(&tangent, 2)],
                vec![to_dvector(&normal, 2)],
                vec![DMatrix::from_element(1, 1, -k)],
            ))
        })
        .collect()
}

fn estimate_surface(mesh: &DiscreteHypersurface) -> Result<Vec<DifferentialData>> {
    let star = mesh.vertex_simplices();
    let nbrs = mesh.vertex_neighbors();
    let mut on_boundary = vec![false; mesh.vertex_count()];
    for facet in mesh.topological_boundary() {
        for v in facet {
            on_boundary[v] = true;
        }
    }
    for (v, incident) in star.iter().enumerate() {
        if !on_boundary[v] && incident.len() < 3 {
            return Err(Error::DegenerateStar { vertex: v, incident: incident.len() });
        }
    }
    (0..mesh.vertex_count()).into_par_iter().map(|v| jet_at(mesh, v, &star[v], &nbrs)).collect()
}

fn jet_at(mesh: &DiscreteHypersurface, v: usize, star: &[usize], nbrs: &[Vec<usize>]) -> Result<DifferentialData> {
    let x = mesh.vertices();
    let p = x[v];
    let mut nz = Vector3::zeros();
    for &s in star {
        let idx = mesh.simplex(s);
        nz += (x[idx[1]] - x[idx[0]]).cross(&(x[idx[2]] - x[idx[0]]));
    }
    if nz.norm() == 0.0 {
        return Err(Error::DegenerateStar { vertex: v, incident: star.len() });
    }
    let nz = nz.normalize();
    let seed = if nz.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (seed - nz * nz.dot(&seed)).normalize();
    let t2 = nz.cross(&t1);

    let mut ring: Vec<usize> = nbrs[v].iter().flat_map(|&u| nbrs[u].iter().copied().chain([u])).filter(|&u| u != v).collect();
    ring.sort_unstable();
    ring.dedup();
    let cubic = ring.len() >= 9;
    if ring.len() < 5 {
        return Err(Error::DegenerateStar { vertex: v, incident: star.len() });
    }

    let scale = ring.iter().map(|&u| (x[u] - p).norm()).sum::<f64>() / ring.len() as f64;
    let cols = if cubic { 9 } else { 5 };
    let mut design = DMatrix::zeros(ring.len(), cols);
    let mut rhs = DVector::zeros(ring.len());
    for (row, &u) in ring.iter().enumerate() {
        let d = x[u] - p;
        let (a, b) = (d.dot(&t1) / scale, d.dot(&t2) / scale);
        let mut terms = vec![a, b, a * a, a * b, b * b];
        if cubic {
            terms.extend([a * a * a, a * a * b, a * b * b, b * b * b]);
        }
        for (c, t) in terms.into_iter().enumerate() {
            design[(row, c)] = t;
        }
        rhs[row] = d.dot(&nz) / scale;
    }
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|_| Error::DegenerateStar { vertex: v, incident: star.len() })?;
    // undo the scaling: z = scale·g(u/scale, v/scale)
    let (a1, a2) = (coef[0], coef[1]);
    let hess = Matrix2::new(2.0 * coef[2], coef[3], coef[3], 2.0 * coef[4]) / scale;

    let xu = t1 + nz * a1;
    let xv = t2 + nz * a2;
    let w = (1.0 + a1 * a1 + a2 * a2).sqrt();
    let normal = (nz - t1 * a1 - t2 * a2) / w;
    let second = hess / w;
    let f1 = xu / xu.norm();
    let proj = xv.dot(&f1);
    let f2_raw = xv - f1 * proj;
    let nrm = f2_raw.norm();
    let f2 = f2_raw / nrm;
    let c = Matrix2::new(1.0 / xu.norm(), -proj / (xu.norm() * nrm), 0.0, 1.0 / nrm);
    let a = c.transpose() * second * c;

    Ok(DifferentialData::assemble(
        to_dvector(&p, 3),
        vec![to_dvector(&f1, 3), to_dvector(&f2, 3)],
        vec![to_dvector(&normal, 3)],
        vec![DMatrix::from_fn(2, 2, |i, j| a[(i, j)])],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::GeneralizedCylinder;
    use crate::mesh::build_mesh;

    fn max_curvature_error(mesh: &DiscreteHypersurface) -> f64 {
        let shape = mesh.analytic_source().unwrap();
        let est = estimate_differential_data(mesh).unwrap();
        est.iter()
            .map(|d| {
                let exact = shape.differential_data(&d.point).unwrap();
                (&d.mean_curvature - &exact.mean_curvature).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_polyline_has_zero_curvature() {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(1, 0).unwrap(), 5.0, 0.05).unwrap();
        for d in estimate_differential_data(&mesh).unwrap() {
            assert!(d.norm_a_sq < 1e-20);
        }
    }

    #[test]
    fn circle_curvature_converges_at_second_order() {
        let shape = GeneralizedCylinder::shrinker(1, 1).unwrap();
        let coarse = max_curvature_error(&build_mesh(&shape, 3.0, 0.2).unwrap());
        let fine = max_curvature_error(&build_mesh(&shape, 3.0, 0.1).unwrap());
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn circle_estimate_matches_analytic_sign() {
        let shape = GeneralizedCylinder::shrinker(1, 1).unwrap();
        let mesh = build_mesh(&shape, 3.0, 0.05).unwrap();
        for d in estimate_differential_data(&mesh).unwrap() {
            let exact = shape.differential_data(&d.point).unwrap();
            assert!((&d.mean_curvature - &exact.mean_curvature).norm() < 1e-3);
            assert!((d.unit_normal().unwrap() - exact.unit_normal().unwrap()).norm() < 1e-3);
        }
    }

    #[test]
    fn sphere_mean_curvature_within_two_percent() {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(2, 2).unwrap(), 3.0, 0.05).unwrap();
        let est = estimate_differential_data(&mesh).unwrap();
        let mean = est.iter().map(|d| d.mean_curvature.norm()).sum::<f64>() / est.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean |H| = {mean}");
    }

    #[test]
    fn sphere_curvature_converges_at_second_order() {
        let shape = GeneralizedCylinder::shrinker(2, 2).unwrap();
        let coarse = max_curvature_error(&build_mesh(&shape, 3.0, 0.4).unwrap());
        let fine = max_curvature_error(&build_mesh(&shape, 3.0, 0.2).unwrap());
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn two_triangle_pillow_is_degenerate() {
        let v = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)];
        let mesh = DiscreteHypersurface::new(2, v, vec![0, 1, 2, 0, 2, 1], vec![]).unwrap();
        assert_eq!(estimate_differential_data(&mesh).unwrap_err(), Error::DegenerateStar { vertex: 0, incident: 2 });
    }

    #[test]
    fn analytic_source_is_used_when_available() {
        let mesh = build_mesh(&GeneralizedCylinder::shrinker(2, 1).unwrap(), 3.0, 0.3).unwrap();
        let data = vertex_differential_data(&mesh, CurvatureSource::Auto).unwrap();
        for d in data {
            assert!(d.shrinker_residual() < 1e-12);
        }
    }
}
