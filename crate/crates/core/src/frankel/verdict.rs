use std::collections::HashMap;

use nalgebra::Vector3;
use serde::Serialize;

use super::distance::SignedDistance;
use super::intersect::{intersection_test, segment_simplex, Witness};
use super::obstacle::{minimize_f_obstacle, Chain, Contact, MinimizeOptions, ObstacleMinimizer, ObstacleRegion};
use crate::certificate::{certify_instability, InstabilityCertificate};
use crate::cutoff::SingularSetProxy;
use crate::error::{Error, Result};
use crate::functional::gaussian_area;
use crate::mesh::DiscreteHypersurface;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectingSegment {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub simplex_start: usize,
    pub simplex_end: usize,
}

impl ConnectingSegment {
    pub fn endpoints(&self) -> (Vector3<f64>, Vector3<f64>) {
        (Vector3::from(self.start), Vector3::from(self.end))
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.endpoints();
        (b - a).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SegmentSearch {
    Segment(ConnectingSegment),
    Intersect(Vec<Witness>),
}

fn nearest_distance(mesh: &DiscreteHypersurface, x: &Vector3<f64>) -> Option<(f64, Vector3<f64>, usize)> {
    SignedDistance::new(mesh).query(x).map(|c| (c.distance.abs(), c.point, c.simplex))
}

/// Closest pair of points of Σ1 and Σ2 inside the closed core ball, found by alternating
/// nearest-point projections from every vertex of Σ1 in the ball and from its point nearest
/// the origin. The open segment between them must miss both surfaces.
pub fn find_segment(a: &DiscreteHypersurface, b: &DiscreteHypersurface, core_radius: f64) -> Result<SegmentSearch> {
    let witnesses = intersection_test(a, b, f64::INFINITY)?;
    for (which, mesh) in [(1, a), (2, b)] {
        let distance = nearest_distance(mesh, &Vector3::zeros()).map_or(f64::INFINITY, |d| d.0);
        if distance > core_radius * (1.0 + 1e-12) {
            return Err(Error::SurfaceMissesCoreBall { which, core_radius, distance });
        }
    }
    if !witnesses.is_empty() {
        return Ok(SegmentSearch::Intersect(witnesses));
    }
    let sa = SignedDistance::new(a);
    let sb = SignedDistance::new(b);
    let inside = |x: &Vector3<f64>| x.norm() <= core_radius * (1.0 + 1e-12);
    let mut starts: Vec<Vector3<f64>> = a.vertices().iter().filter(|v| inside(v)).copied().collect();
    if let Some(c) = sa.query(&Vector3::zeros()) {
        starts.push(c.point);
    }
    let mut candidates: Vec<(f64, Vector3<f64>, Vector3<f64>, usize, usize)> = Vec::new();
    for p0 in starts {
        let mut p = p0;
        let Some(mut cp) = sa.query(&p) else { continue };
        let mut pair = None;
        for _ in 0..50 {
            let Some(cq) = sb.query(&p) else { break };
            if !inside(&cq.point) {
                break;
            }
            let next = sa.query(&cq.point).filter(|c| inside(&c.point));
            pair = Some((p, cq.point, cp.simplex, cq.simplex));
            match next {
                Some(c) if (c.point - p).norm() > 1e-14 => {
                    p = c.point;
                    cp = c;
                }
                _ => break,
            }
        }
        if let Some((p, q, i, j)) = pair {
            candidates.push(((q - p).norm(), p, q, i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (_, p, q, i, j) in candidates {
        if open_segment_clear(&p, &q, a) && open_segment_clear(&p, &q, b) {
            return Ok(SegmentSearch::Segment(ConnectingSegment {
                start: p.into(),
                end: q.into(),
                simplex_start: i,
                simplex_end: j,
            }));
        }
    }
    Err(Error::InvalidParameter("no connecting segment with interior disjoint from both surfaces".into()))
}

/// The open segment (p, q) shortened by a relative margin misses the mesh.
fn open_segment_clear(p: &Vector3<f64>, q: &Vector3<f64>, mesh: &DiscreteHypersurface) -> bool {
    let d = q - p;
    let (p2, q2) = (p + d * 1e-6, q - d * 1e-6);
    (0..mesh.simplex_count()).all(|s| segment_simplex(&p2, &q2, mesh, s).is_none())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrankelOptions {
    /// Radius of the closed ball that must contain the segment; √(2n) for shrinkers.
    pub core_radius: Option<f64>,
    /// Initial offset of Γ from Σ1 into Ω, as a fraction of the edge length of Σ1.
    pub offset: f64,
    pub minimize: MinimizeOptions,
    pub epsilon: f64,
}

impl Default for FrankelOptions {
    fn default() -> Self {
        Self { core_radius: None, offset: 0.25, minimize: MinimizeOptions::default(), epsilon: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum FrankelVerdict {
    Intersect {
        witnesses: Vec<Witness>,
    },
    DisjointEvidence {
        segment: ConnectingSegment,
        #[serde(rename = "F_gamma")]
        f_gamma: f64,
        /// Γ1 meets the segment (the constructive stand-in for linking).
        meets_segment: bool,
        certificate: Option<InstabilityCertificate>,
        minimizer: ObstacleMinimizer,
    },
}

impl FrankelVerdict {
    pub fn intersects(&self) -> bool {
        matches!(self, FrankelVerdict::Intersect { .. })
    }

    pub fn certificate_fires(&self) -> bool {
        matches!(self, FrankelVerdict::DisjointEvidence { certificate: Some(c), .. } if c.fires)
    }
}

/// Vertex pseudonormals of Σ1 from the simplex normals.
fn vertex_normals(mesh: &DiscreteHypersurface) -> Vec<Vector3<f64>> {
    let mut out = vec![Vector3::zeros(); mesh.vertex_count()];
    for s in 0..mesh.simplex_count() {
        let n = mesh.simplex_normal(s) * mesh.simplex_volume(s);
        for &v in mesh.simplex(s) {
            out[v] += n;
        }
    }
    out.iter().map(|n| if n.norm() > 0.0 { n.normalize() } else { *n }).collect()
}

/// Σ1 pushed a little into Ω, with its boundary vertices held fixed.
fn initial_gamma(mesh: &DiscreteHypersurface, region: &ObstacleRegion, offset: f64) -> Chain {
    let mut chain = Chain::from_mesh(mesh);
    let h = mesh.max_edge_length() * offset;
    let normals = vertex_normals(mesh);
    for v in 0..chain.vertices.len() {
        if chain.fixed[v] {
            continue;
        }
        let x = chain.vertices[v];
        let options = [x + normals[v] * h, x - normals[v] * h];
        // pick the side that stays in the region and is away from Σ1
        if let Some(y) = options.iter().find(|y| region.contains(y) && region.depth(0, y) > 0.0) {
            chain.vertices[v] = *y;
        }
    }
    chain
}

/// Connected components of the simplices that are not entirely on the sphere |x| = R.
fn interior_components(min: &ObstacleMinimizer) -> Vec<Vec<usize>> {
    let chain = &min.gamma;
    let keep: Vec<usize> =
        (0..chain.simplex_count()).filter(|&s| chain.simplex(s).iter().any(|&v| min.contact[v] != Contact::Ball)).collect();
    let mut parent: Vec<usize> = (0..keep.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (k, &s) in keep.iter().enumerate() {
        for &v in chain.simplex(s) {
            if let Some(&other) = owner.get(&v) {
                let (a, b) = (find(&mut parent, k), find(&mut parent, other));
                parent[a] = b;
            } else {
                owner.insert(v, k);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for k in 0..keep.len() {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(keep[k]);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Sub-mesh on the given simplices; its boundary is the topological boundary plus every
/// vertex on the sphere |x| = R.
fn submesh(min: &ObstacleMinimizer, simplices: &[usize], radius: f64) -> Result<DiscreteHypersurface> {
    let chain = &min.gamma;
    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut flat = Vec::new();
    for &s in simplices {
        for &v in chain.simplex(s) {
            let id = *map.entry(v).or_insert_with(|| {
                vertices.push(chain.vertices[v]);
                vertices.len() - 1
            });
            flat.push(id);
        }
    }
    let plain = DiscreteHypersurface::new(chain.dim, vertices.clone(), flat.clone(), Vec::new())?;
    let mut boundary: Vec<usize> = plain.topological_boundary().into_iter().flatten().collect();
    for (&old, &new) in &map {
        if min.contact[old] == Contact::Ball || chain.fixed[old] {
            boundary.push(new);
        }
    }
    boundary.sort_unstable();
    boundary.dedup();
    if chain.dim == 2 {
        // boundary entries are facets for surfaces; keep the topological edges and add
        // degenerate-free edges only where both ends are on the sphere
        let mut facets: Vec<usize> = plain.topological_boundary().into_iter().flatten().collect();
        let on_sphere: Vec<bool> = (0..vertices.len()).map(|v| boundary.binary_search(&v).is_ok()).collect();
        for s in 0..plain.simplex_count() {
            let idx = plain.simplex(s);
            for i in 0..3 {
                let (p, q) = (idx[i], idx[(i + 1) % 3]);
                if on_sphere[p] && on_sphere[q] {
                    facets.extend([p, q]);
                }
            }
        }
        return Ok(DiscreteHypersurface::new(2, vertices, flat, facets)?.with_construction_radius(Some(radius)));
    }
    Ok(DiscreteHypersurface::new(chain.dim, vertices, flat, boundary)?.with_construction_radius(Some(radius)))
}

/// Intersect if Σ1 and Σ2 meet in B_R; otherwise minimize F in the region between them and
/// certify the component of the minimizer that meets the connecting segment.
pub fn frankel_verdict(
    s1: &DiscreteHypersurface,
    s2: &DiscreteHypersurface,
    radius: f64,
    opts: &FrankelOptions,
) -> Result<FrankelVerdict> {
    let witnesses = intersection_test(s1, s2, radius)?;
    if !witnesses.is_empty() {
        return Ok(FrankelVerdict::Intersect { witnesses });
    }
    let n = s1.dim();
    let core = opts.core_radius.unwrap_or((2.0 * n as f64).sqrt());
    let segment = match find_segment(s1, s2, core)? {
        SegmentSearch::Intersect(witnesses) => return Ok(FrankelVerdict::Intersect { witnesses }),
        SegmentSearch::Segment(seg) => seg,
    };
    let (p, q) = segment.endpoints();
    let seed = (p + q) * 0.5;
    let region = ObstacleRegion::new(&[s1, s2], &seed, radius)?;
    let mut minimize = opts.minimize;
    if n == 2 && minimize.direction.is_none() {
        minimize.direction = Some(graph_direction(s1)?.into());
    }
    let gamma0 = initial_gamma(s1, &region, opts.offset);
    let minimizer = minimize_f_obstacle(&region, gamma0, &minimize)?;
    let component = interior_components(&minimizer).into_iter().find(|c| {
        c.iter().any(|&s| {
            let idx = minimizer.gamma.simplex(s);
            let pts: Vec<Vector3<f64>> = idx.iter().map(|&v| minimizer.gamma.vertices[v]).collect();
            let piece = DiscreteHypersurface::new(n, pts, (0..=n).collect(), Vec::new());
            piece.map(|m| segment_simplex(&p, &q, &m, 0).is_some()).unwrap_or(false)
        })
    });
    let meets_segment = component.is_some();
    let certificate = match &component {
        Some(c) => {
            let gamma1 = submesh(&minimizer, c, radius)?;
            let r1 = (4.0 + 2.0 * n as f64).sqrt();
            let proxy = SingularSetProxy::empty(1.0 / (6.0 * radius), radius)?;
            match certify_instability(&gamma1, r1, radius, &proxy, opts.epsilon) {
                Ok(cert) => Some(cert),
                Err(Error::Precondition(_)) | Err(Error::RadiusExceedsDomain { .. }) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    let f_gamma = DiscreteHypersurface::new(n, minimizer.gamma.vertices.clone(), minimizer.gamma.simplices.clone(), Vec::new())
        .map(|m| gaussian_area(&m))
        .unwrap_or(minimizer.f_final);
    Ok(FrankelVerdict::DisjointEvidence { segment, f_gamma, meets_segment, certificate, minimizer })
}

/// Reference direction for graph-type surfaces: the area-weighted mean normal, required to
/// have positive component on every simplex normal.
fn graph_direction(mesh: &DiscreteHypersurface) -> Result<Vector3<f64>> {
    let mean: Vector3<f64> = (0..mesh.simplex_count()).map(|s| mesh.simplex_normal(s) * mesh.simplex_volume(s)).sum();
    if mean.norm() == 0.0 {
        return Err(Error::InvalidParameter("n = 2 minimization needs a graph-type surface".into()));
    }
    let e = mean.normalize();
    if (0..mesh.simplex_count()).any(|s| mesh.simplex_normal(s).dot(&e) <= 0.0) {
        return Err(Error::InvalidParameter("n = 2 minimization needs a graph-type surface".into()));
    }
    Ok(e)
}
