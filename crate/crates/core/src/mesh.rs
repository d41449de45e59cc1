//! Simplicial codimension-one hypersurfaces (polylines in R², triangle meshes in R³).

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;

use crate::catalog::{GeneralizedCylinder, ON_SURFACE_TOL};
use crate::error::{Error, MeshError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    /// One point per simplex at the barycenter.
    #[default]
    Barycenter,
    /// Degree-two rule: three interior points per triangle, three Gauss points per segment.
    ThreePoint,
}

impl QuadratureRule {
    fn reference(self, dim: usize) -> Vec<([f64; 3], f64)> {
        match (self, dim) {
            (QuadratureRule::Barycenter, 1) => vec![([0.5, 0.5, 0.0], 1.0)],
            (QuadratureRule::Barycenter, _) => vec![([1.0 / 3.0; 3], 0.5)],
            (QuadratureRule::ThreePoint, 1) => {
                let a = 0.5 * (1.0 - (0.6f64).sqrt());
                vec![
                    ([1.0 - a, a, 0.0], 5.0 / 18.0),
                    ([0.5, 0.5, 0.0], 8.0 / 18.0),
                    ([a, 1.0 - a, 0.0], 5.0 / 18.0),
                ]
            }
            (QuadratureRule::ThreePoint, _) => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                vec![([a, b, b], 1.0 / 6.0), ([b, a, b], 1.0 / 6.0), ([b, b, a], 1.0 / 6.0)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePoint {
    pub point: Vector3<f64>,
    pub weight: f64,
    /// Barycentric coordinates of the (unlifted) reference point in its simplex.
    pub barycentric: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct DiscreteHypersurface {
    dim: usize,
    ambient: usize,
    vertices: Vec<Vector3<f64>>,
    simplices: Vec<usize>,
    boundary_facets: Vec<usize>,
    boundary_vertex: Vec<bool>,
    construction_radius: Option<f64>,
    analytic_source: Option<GeneralizedCylinder>,
    rule: QuadratureRule,
    quadrature: Vec<QuadraturePoint>,
}

impl DiscreteHypersurface {
    /// Validate and build a mesh. `vertices` carry N = dim + 1 meaningful coordinates; for
    /// dim = 1 the third coordinate must be zero. Simplices and boundary facets are flat
    /// index lists with strides dim + 1 and dim.
    pub fn new(
        dim: usize,
        vertices: Vec<Vector3<f64>>,
        simplices: Vec<usize>,
        boundary_facets: Vec<usize>,
    ) -> Result<Self> {
        Self::new_with_lines(dim, vertices, simplices, boundary_facets, |i| i)
    }

    pub(crate) fn new_with_lines(
        dim: usize,
        vertices: Vec<Vector3<f64>>,
        simplices: Vec<usize>,
        boundary_facets: Vec<usize>,
        simplex_line: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let stride = dim + 1;
        if simplices.len() % stride != 0 || boundary_facets.len() % dim != 0 {
            return Err(MeshError::Malformed { line: 0, reason: "index list length".into() }.into());
        }
        let count = vertices.len();
        for (s, simplex) in simplices.chunks(stride).enumerate() {
            for &index in simplex {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange { line: simplex_line(s), index, count }.into());
                }
            }
        }
        for &index in &boundary_facets {
            if index >= count {
                return Err(MeshError::IndexOutOfRange { line: 0, index, count }.into());
            }
        }
        let mut boundary_vertex = vec![false; count];
        for &v in &boundary_facets {
            boundary_vertex[v] = true;
        }
        let mut mesh = Self {
            dim,
            ambient: dim + 1,
            vertices,
            simplices,
            boundary_facets,
            boundary_vertex,
            construction_radius: None,
            analytic_source: None,
            rule: QuadratureRule::default(),
            quadrature: Vec::new(),
        };
        for s in 0..mesh.simplex_count() {
            let volume = mesh.simplex_volume(s);
            let diam = mesh.simplex_diameter(s);
            if !(volume > 1e-14 * diam.powi(dim as i32)) || diam == 0.0 {
                return Err(MeshError::DegenerateSimplex { line: simplex_line(s), simplex: s }.into());
            }
        }
        mesh.check_orientation()?;
        mesh.rebuild_quadrature();
        Ok(mesh)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn simplex(&self, s: usize) -> &[usize] {
        let stride = self.dim + 1;
        &self.simplices[s * stride..(s + 1) * stride]
    }

    pub fn simplices(&self) -> impl Iterator<Item = &[usize]> {
        self.simplices.chunks(self.dim + 1)
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = &[usize]> {
        self.boundary_facets.chunks(self.dim)
    }

    pub fn boundary_facet_count(&self) -> usize {
        self.boundary_facets.len() / self.dim
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn construction_radius(&self) -> Option<f64> {
        self.construction_radius
    }

    /// Construction radius if known, else the largest vertex norm.
    pub fn domain_radius(&self) -> f64 {
        self.construction_radius
            .unwrap_or_else(|| self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    pub fn analytic_source(&self) -> Option<&GeneralizedCylinder> {
        self.analytic_source.as_ref()
    }

    pub fn quadrature_rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Vertex as a point of R^N.
    pub fn point(&self, v: usize) -> DVector<f64> {
        to_dvector(&self.vertices[v], self.ambient)
    }

    /// Attach (or drop) the catalog shape this mesh samples; quadrature points are then
    /// lifted onto the shape. Fails if some vertex is off the shape.
    pub fn with_analytic_source(mut self, source: Option<GeneralizedCylinder>) -> Result<Self> {
        if let Some(shape) = &source {
            if shape.n() != self.dim || shape.ambient_dim() != self.ambient {
                return Err(Error::DimensionMismatch("analytic source dimensions".into()));
            }
            for v in 0..self.vertex_count() {
                let distance = shape.distance(&self.point(v));
                if distance > ON_SURFACE_TOL {
                    return Err(Error::PointOffSurface { distance });
                }
            }
        }
        self.analytic_source = source;
        self.rebuild_quadrature();
        Ok(self)
    }

    /// The same combinatorics with every vertex moved by `f`; the analytic source is dropped.
    pub fn map_vertices(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Result<Self> {
        let vertices = self.vertices.iter().map(f).collect();
        let mesh = Self::new(self.dim, vertices, self.simplices.clone(), self.boundary_facets.clone())?;
        Ok(mesh.with_construction_radius(self.construction_radius).with_quadrature(self.rule))
    }

    pub fn with_construction_radius(mut self, radius: Option<f64>) -> Self {
        self.construction_radius = radius;
        self
    }

    pub fn with_quadrature(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self.rebuild_quadrature();
        self
    }

    pub fn points_per_simplex(&self) -> usize {
        self.rule.reference(self.dim).len()
    }

    /// Quadrature points of simplex `s`.
    pub fn quadrature(&self, s: usize) -> &[QuadraturePoint] {
        let q = self.points_per_simplex();
        &self.quadrature[s * q..(s + 1) * q]
    }

    pub fn all_quadrature(&self) -> &[QuadraturePoint] {
        &self.quadrature
    }

    fn rebuild_quadrature(&mut self) {
        let reference = self.rule.reference(self.dim);
        let this = &*self;
        let points: Vec<Vec<QuadraturePoint>> = (0..this.simplex_count())
            .into_par_iter()
            .map(|s| {
                let idx = this.simplex(s);
                let p: Vec<Vector3<f64>> = idx.iter().map(|&v| this.vertices[v]).collect();
                let edges: Vec<Vector3<f64>> = p[1..].iter().map(|q| q - p[0]).collect();
                reference
                    .iter()
                    .map(|(bary, w)| {
                        let flat = p.iter().zip(bary).fold(Vector3::zeros(), |acc, (q, b)| acc + q * *b);
                        match &this.analytic_source {
                            None => QuadraturePoint {
                                point: flat,
                                weight: w * gram_root(&edges),
                                barycentric: *bary,
                            },
                            Some(shape) => {
                                let x = to_dvector(&flat, this.ambient);
                                let lifted: Vec<Vector3<f64>> = edges
                                    .iter()
                                    .map(|e| from_dvector(&shape.projection_differential(&x, &to_dvector(e, this.ambient))))
                                    .collect();
                                QuadraturePoint {
                                    point: from_dvector(&shape.project(&x)),
                                    weight: w * gram_root(&lifted),
                                    barycentric: *bary,
                                }
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        self.quadrature = points.into_iter().flatten().collect();
    }

    /// Flat n-volume of simplex `s`.
    pub fn simplex_volume(&self, s: usize) -> f64 {
        let idx = self.simplex(s);
        let p0 = self.vertices[idx[0]];
        let edges: Vec<Vector3<f64>> = idx[1..].iter().map(|&v| self.vertices[v] - p0).collect();
        gram_root(&edges) / if self.dim == 2 { 2.0 } else { 1.0 }
    }

    pub fn simplex_diameter(&self, s: usize) -> f64 {
        let idx = self.simplex(s);
        let mut d: f64 = 0.0;
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                d = d.max((self.vertices[idx[i]] - self.vertices[idx[j]]).norm());
            }
        }
        d
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.simplex_count()).map(|s| self.simplex_volume(s)).sum()
    }

    /// Oriented unit normal of a simplex (rotate the edge by +90° for polylines).
    pub fn simplex_normal(&self, s: usize) -> Vector3<f64> {
        let idx = self.simplex(s);
        let p = |i: usize| self.vertices[idx[i]];
        if self.dim == 1 {
            let e = p(1) - p(0);
            Vector3::new(e.y, -e.x, 0.0).normalize()
        } else {
            (p(1) - p(0)).cross(&(p(2) - p(0))).normalize()
        }
    }

    /// Edges as sorted vertex pairs (segments themselves for polylines).
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = Vec::new();
        for simplex in self.simplices() {
            for i in 0..simplex.len() {
                for j in i + 1..simplex.len() {
                    let (a, b) = (simplex[i].min(simplex[j]), simplex[i].max(simplex[j]));
                    edges.push([a, b]);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|[a, b]| (self.vertices[*a] - self.vertices[*b]).norm())
            .fold(0.0, f64::max)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.vertex_count() as i64;
        let e = self.edges().len() as i64;
        if self.dim == 1 {
            v - e
        } else {
            v - e + self.simplex_count() as i64
        }
    }

    /// Simplices incident to each vertex.
    pub fn vertex_simplices(&self) -> Vec<Vec<usize>> {
        let mut star = vec![Vec::new(); self.vertex_count()];
        for (s, simplex) in self.simplices().enumerate() {
            for &v in simplex {
                star[v].push(s);
            }
        }
        star
    }

    /// Vertices sharing an edge with each vertex, sorted.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.vertex_count()];
        for [a, b] in self.edges() {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        nbrs
    }

    /// Facets that belong to exactly one simplex, as sorted index lists.
    pub fn topological_boundary(&self) -> Vec<Vec<usize>> {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for simplex in self.simplices() {
            for facet in facets_of(simplex) {
                let mut key = facet;
                key.sort_unstable();
                *count.entry(key).or_default() += 1;
            }
        }
        let mut out: Vec<Vec<usize>> = count.into_iter().filter(|(_, c)| *c == 1).map(|(f, _)| f).collect();
        out.sort();
        out
    }

    fn check_orientation(&self) -> Result<()> {
        // each oriented facet may occur at most once; each unoriented facet at most twice
        let mut oriented: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut unoriented: HashMap<Vec<usize>, usize> = HashMap::new();
        for simplex in self.simplices() {
            for facet in oriented_facets(simplex) {
                let mut key = facet.clone();
                key.sort_unstable();
                let c = unoriented.entry(key.clone()).or_default();
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifold { facet: key }.into());
                }
                let o = oriented.entry(facet).or_default();
                *o += 1;
                if *o > 1 {
                    return Err(MeshError::InconsistentOrientation { facet: key }.into());
                }
            }
        }
        Ok(())
    }

    /// Per-vertex Voronoi-free lumped measure: each simplex hands 1/(n+1) of its flat volume to its vertices.
    pub fn lumped_volumes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_count()];
        for s in 0..self.simplex_count() {
            let share = self.simplex_volume(s) / (self.dim + 1) as f64;
            for &v in self.simplex(s) {
                out[v] += share;
            }
        }
        out
    }
}

/// Facets of a simplex with the induced orientation (for a segment: its endpoints tagged by role).
fn oriented_facets(simplex: &[usize]) -> Vec<Vec<usize>> {
    match simplex.len() {
        // a polyline vertex may start one segment and end another
        2 => vec![vec![simplex[0], usize::MAX], vec![usize::MAX, simplex[1]]],
        _ => vec![
            vec![simplex[0], simplex[1]],
            vec![simplex[1], simplex[2]],
            vec![simplex[2], simplex[0]],
        ],
    }
}

fn facets_of(simplex: &[usize]) -> Vec<Vec<usize>> {
    match simplex.len() {
        2 => vec![vec![simplex[0]], vec![simplex[1]]],
        _ => vec![
            vec![simplex[0], simplex[1]],
            vec![simplex[1], simplex[2]],
            vec![simplex[2], simplex[0]],
        ],
    }
}

/// sqrt(det(EᵀE)) for the edge vectors E of a simplex.
pub(crate) fn gram_root(edges: &[Vector3<f64>]) -> f64 {
    match edges.len() {
        1 => edges[0].norm(),
        2 => edges[0].cross(&edges[1]).norm(),
        _ => 0.0,
    }
}

pub(crate) fn to_dvector(v: &Vector3<f64>, ambient: usize) -> DVector<f64> {
    DVector::from_iterator(ambient, v.iter().copied().take(ambient))
}

pub(crate) fn from_dvector(v: &DVector<f64>) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for (i, c) in v.iter().take(3).enumerate() {
        out[i] = *c;
    }
    out
}

/// Discretize B_R ∩ shape with target edge length h. Generated meshes carry the shape as
/// their analytic source and flag the facets on |x| = R as boundary.
pub fn build_mesh(shape: &GeneralizedCylinder, radius: f64, h: f64) -> Result<DiscreteHypersurface> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("edge length h must be positive, got {h}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
    }
    let n = shape.n();
    if n > 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if shape.ambient_dim() != n + 1 {
        return Err(Error::DimensionMismatch("meshes are codimension one".into()));
    }
    let (local, simplices) = match (n, shape.k()) {
        (1, 0) => line_mesh(shape, radius, h)?,
        (1, _) => circle_mesh(shape, radius, h)?,
        (_, k) => {
            if !shape.is_centered() {
                return Err(Error::InvalidParameter("surface meshes need shapes centered at the origin".into()));
            }
            if k > 0 && radius <= shape.radius() {
                return Err(Error::RadiusTooSmall { radius, needed: shape.radius() });
            }
            match k {
                0 => disk_mesh(radius, h),
                1 => cylinder_mesh(shape.radius(), (radius * radius - shape.radius().powi(2)).sqrt(), h),
                _ => icosphere(shape.radius(), h),
            }
        }
    };
    let vertices: Vec<Vector3<f64>> = local.iter().map(|y| from_dvector(&shape.global(y))).collect();
    let mut mesh = DiscreteHypersurface::new(n, vertices, simplices, Vec::new())?;
    let boundary: Vec<usize> = mesh.topological_boundary().into_iter().flatten().collect();
    for &v in &boundary {
        mesh.boundary_vertex[v] = true;
    }
    mesh.boundary_facets = boundary;
    mesh.construction_radius = Some(radius);
    mesh.with_analytic_source(Some(shape.clone()))
}

fn local_point(ambient: usize, coords: &[(usize, f64)]) -> DVector<f64> {
    let mut y = DVector::zeros(ambient);
    for &(i, c) in coords {
        y[i] = c;
    }
    y
}

/// Line: local coordinate 1 is the Euclidean factor.
fn line_mesh(shape: &GeneralizedCylinder, radius: f64, h: f64) -> Result<(Vec<DVector<f64>>, Vec<usize>)> {
    // |c' + t e1|² = R² in local coordinates, c' = Rᵀ offset
    let c = shape.rotation().tr_mul(shape.offset());
    let perp = c[0];
    if perp.abs() >= radius {
        return Err(Error::RadiusTooSmall { radius, needed: perp.abs() });
    }
    let half = (radius * radius - perp * perp).sqrt();
    let (t0, t1) = (-c[1] - half, -c[1] + half);
    let mut m = ((t1 - t0) / h).ceil().max(1.0) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let pts = (0..=m)
        .map(|j| {
            let t = if j == m { t1 } else { t0 + (t1 - t0) * j as f64 / m as f64 };
            local_point(2, &[(0, 0.0), (1, t)])
        })
        .collect();
    let segs = (0..m).flat_map(|j| [j, j + 1]).collect();
    Ok((pts, segs))
}

fn circle_mesh(shape: &GeneralizedCylinder, radius: f64, h: f64) -> Result<(Vec<DVector<f64>>, Vec<usize>)> {
    let rho = shape.radius();
    let c = shape.rotation().tr_mul(shape.offset());
    let center_dist = c.norm();
    // |c' + rho u|² = |c'|² + rho² + 2 rho <c', u>
    let max_norm = center_dist + rho;
    let min_norm = (center_dist - rho).abs();
    if min_norm >= radius {
        return Err(Error::RadiusTooSmall { radius, needed: min_norm });
    }
    let at = |theta: f64| local_point(2, &[(0, rho * theta.cos()), (1, rho * theta.sin())]);
    if max_norm < radius {
        let m = round_up4(((2.0 * PI * rho) / h).ceil() as usize).max(8);
        let pts = (0..m).map(|j| at(2.0 * PI * j as f64 / m as f64)).collect();
        let segs = (0..m).flat_map(|j| [j, (j + 1) % m]).collect();
        return Ok((pts, segs));
    }
    // arc where |c' + rho u(θ)| ≤ R: cos(θ - φ) ≥ -(R² - |c'|² - rho²)/(2 rho |c'|), φ = direction of -c'
    let phi = (-c[1]).atan2(-c[0]);
    let cos_limit = (radius * radius - center_dist * center_dist - rho * rho) / (2.0 * rho * center_dist);
    let half = (-cos_limit).clamp(-1.0, 1.0).acos();
    let (a, b) = (phi - half, phi + half);
    let m = (((b - a) * rho) / h).ceil().max(1.0) as usize;
    let pts = (0..=m).map(|j| at(a + (b - a) * j as f64 / m as f64)).collect();
    let segs = (0..m).flat_map(|j| [j, j + 1]).collect();
    Ok((pts, segs))
}

fn round_up4(m: usize) -> usize {
    m.div_ceil(4) * 4
}

/// Concentric-ring triangulation of the disk of radius R in local coordinates (y1, y2).
fn disk_mesh(radius: f64, h: f64) -> (Vec<DVector<f64>>, Vec<usize>) {
    let rings = (radius / h).ceil().max(1.0) as usize;
    let mut pts = vec![local_point(3, &[])];
    let mut start = vec![0usize];
    for i in 1..=rings {
        start.push(pts.len());
        let r = if i == rings { radius } else { radius * i as f64 / rings as f64 };
        let count = 6 * i;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            pts.push(local_point(3, &[(1, r * theta.cos()), (2, r * theta.sin())]));
        }
    }
    let mut tris = Vec::new();
    for i in 1..=rings {
        let inner_count = if i == 1 { 1 } else { 6 * (i - 1) };
        let outer_count = 6 * i;
        let inner = |a: usize| start[i - 1] + a % inner_count;
        let outer = |b: usize| start[i] + b % outer_count;
        let (mut a, mut b) = (0usize, 0usize);
        while a < inner_count || b < outer_count {
            let next_outer = (b + 1) as f64 / outer_count as f64;
            let next_inner = (a + 1) as f64 / inner_count as f64;
            let advance_outer = b < outer_count && (a >= inner_count || i == 1 || next_outer < next_inner);
            if advance_outer {
                tris.extend_from_slice(&[inner(a), outer(b), outer(b + 1)]);
                b += 1;
            } else {
                tris.extend_from_slice(&[inner(a), outer(b), inner(a + 1)]);
                a += 1;
            }
            if i == 1 && b == outer_count {
                break;
            }
        }
    }
    (pts, tris)
}

/// Structured (θ, z) triangulation of S¹_rho × [-half, half].
fn cylinder_mesh(rho: f64, half: f64, h: f64) -> (Vec<DVector<f64>>, Vec<usize>) {
    let m_theta = round_up4(((2.0 * PI * rho) / h).ceil() as usize).max(8);
    let m_z = ((2.0 * half) / h).ceil().max(1.0) as usize;
    let mut pts = Vec::with_capacity(m_theta * (m_z + 1));
    for l in 0..=m_z {
        let z = if l == m_z { half } else { -half + 2.0 * half * l as f64 / m_z as f64 };
        for j in 0..m_theta {
            let theta = 2.0 * PI * j as f64 / m_theta as f64;
            pts.push(local_point(3, &[(0, rho * theta.cos()), (1, rho * theta.sin()), (2, z)]));
        }
    }
    let id = |j: usize, l: usize| l * m_theta + j % m_theta;
    let mut tris = Vec::new();
    for l in 0..m_z {
        for j in 0..m_theta {
            tris.extend_from_slice(&[id(j, l), id(j + 1, l), id(j + 1, l + 1)]);
            tris.extend_from_slice(&[id(j, l), id(j + 1, l + 1), id(j, l + 1)]);
        }
    }
    (pts, tris)
}

/// Subdivided icosahedron of the given radius; the level is the smallest with max edge ≤ h.
fn icosphere(radius: f64, h: f64) -> (Vec<DVector<f64>>, Vec<usize>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize() * radius)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let max_edge = |verts: &[Vector3<f64>], faces: &[[usize; 3]]| {
        faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (verts[a] - verts[b]).norm())
            .fold(0.0, f64::max)
    };
    while max_edge(&verts, &faces) > h {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize() * radius);
                verts.len() - 1
            })
        };
        for f in &faces {
            let ab = mid(f[0], f[1], &mut verts);
            let bc = mid(f[1], f[2], &mut verts);
            let ca = mid(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let pts = verts.iter().map(|v| DVector::from_column_slice(v.as_slice())).collect();
    (pts, faces.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_mesh_is_closed() {
        let s = GeneralizedCylinder::shrinker(2, 2).unwrap();
        let mesh = build_mesh(&s, 3.0, 0.1).unwrap();
        assert_eq!(mesh.euler_characteristic(), 2);
        assert_eq!(mesh.boundary_facet_count(), 0);
        assert!(mesh.max_edge_length() <= 0.15);
        assert!(mesh.boundary_vertices().iter().all(|b| !b));
    }

    #[test]
    fn line_mesh_spans_the_ball() {
        let line = GeneralizedCylinder::shrinker(1, 0).unwrap();
        let mesh = build_mesh(&line, 5.0, 0.05).unwrap();
        assert_eq!(mesh.boundary_facet_count(), 2);
        assert_relative_eq!(mesh.total_volume(), 10.0, max_relative = 1e-12);
        for f in mesh.boundary_facets() {
            assert_relative_eq!(mesh.vertices()[f[0]].norm(), 5.0, max_relative = 1e-12);
        }
        assert!(mesh.max_edge_length() <= 0.05 * 1.5);
    }

    #[test]
    fn cylinder_mesh_boundary_on_sphere() {
        let c = GeneralizedCylinder::shrinker(2, 1).unwrap();
        let h = 0.1;
        let mesh = build_mesh(&c, 6.0, h).unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
        assert!(mesh.boundary_facet_count() > 0);
        for f in mesh.boundary_facets() {
            for &v in f {
                let r = mesh.vertices()[v].norm();
                assert!(r <= 6.0 + 1e-12 && r >= 6.0 - h, "boundary vertex norm {r}");
            }
        }
        assert!(mesh.max_edge_length() <= 1.5 * h);
    }

    #[test]
    fn disk_mesh_topology_and_area() {
        let plane = GeneralizedCylinder::shrinker(2, 0).unwrap();
        let mesh = build_mesh(&plane, 2.0, 0.1).unwrap();
        assert_eq!(mesh.euler_characteristic(), 1);
        assert!(mesh.max_edge_length() <= 0.15, "max edge {}", mesh.max_edge_length());
        let area = mesh.total_volume();
        assert!((area - 4.0 * PI).abs() / (4.0 * PI) < 2e-3);
    }

    #[test]
    fn radius_too_small_is_reported() {
        let s = GeneralizedCylinder::shrinker(2, 2).unwrap();
        assert!(matches!(build_mesh(&s, 1.5, 0.1), Err(Error::RadiusTooSmall { .. })));
        let c = GeneralizedCylinder::shrinker(1, 1).unwrap();
        assert!(matches!(build_mesh(&c, 1.0, 0.1), Err(Error::RadiusTooSmall { .. })));
    }

    #[test]
    fn high_dimension_is_unsupported() {
        let s = GeneralizedCylinder::shrinker(3, 1).unwrap();
        assert_eq!(build_mesh(&s, 4.0, 0.1).unwrap_err(), Error::UnsupportedDimension(3));
    }

    #[test]
    fn flipped_triangle_is_inconsistent() {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
        ];
        let bad = DiscreteHypersurface::new(2, v.clone(), vec![0, 1, 2, 1, 2, 3], vec![]);
        assert!(matches!(bad, Err(Error::Mesh(MeshError::InconsistentOrientation { .. }))));
        assert!(DiscreteHypersurface::new(2, v, vec![0, 1, 2, 2, 1, 3], vec![]).is_ok());
    }

    #[test]
    fn offset_circle_is_clipped_to_an_arc() {
        let c = GeneralizedCylinder::with_radius(1, 1, 2.0)
            .unwrap()
            .translated(&DVector::from_vec(vec![3.0, 0.0]))
            .unwrap();
        let mesh = build_mesh(&c, 3.0, 0.05).unwrap();
        assert_eq!(mesh.boundary_facet_count(), 2);
        for f in mesh.boundary_facets() {
            assert_relative_eq!(mesh.vertices()[f[0]].norm(), 3.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn lifted_quadrature_integrates_sphere_area() {
        let s = GeneralizedCylinder::shrinker(2, 2).unwrap();
        let mesh = build_mesh(&s, 3.0, 0.2).unwrap().with_quadrature(QuadratureRule::ThreePoint);
        let area: f64 = mesh.all_quadrature().iter().map(|q| q.weight).sum();
        assert_relative_eq!(area, 16.0 * PI, max_relative = 1e-4);
        for q in mesh.all_quadrature() {
            assert_relative_eq!(q.point.norm(), 2.0, max_relative = 1e-14);
        }
    }
}
