//! Generalized cylinders S^k_r × R^{n-k} and their closed-form differential data.
//!
//! A cylinder is stored in a standard splitting of R^N: local coordinates
//! `0..=k` carry the sphere factor, `k+1..=n` the Euclidean factor and
//! `n+1..N` are padding directions normal to everything. The global point is
//! `rotation * local + offset`. The shrinker instances have `r = sqrt(2k)` and
//! no offset; other radii and offsets exist as test doubles.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points farther than this from the shape are rejected by analytic evaluation.
pub const ON_SURFACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedCylinder {
    n: usize,
    k: usize,
    radius: f64,
    #[serde(skip)]
    rotation: DMatrix<f64>,
    #[serde(skip)]
    offset: DVector<f64>,
}

impl GeneralizedCylinder {
    /// The shrinker S^k_{sqrt(2k)} × R^{n-k} in R^{n+1}.
    pub fn shrinker(n: usize, k: usize) -> Result<Self> {
        Self::shrinker_in(n, k, n + 1)
    }

    /// The shrinker padded into R^ambient (ambient ≥ n+1); extra directions are normal.
    pub fn shrinker_in(n: usize, k: usize, ambient: usize) -> Result<Self> {
        Self::build(n, k, (2.0 * k as f64).sqrt(), ambient)
    }

    /// S^k_radius × R^{n-k} in R^{n+1}; a shrinker only when radius = sqrt(2k).
    pub fn with_radius(n: usize, k: usize, radius: f64) -> Result<Self> {
        if k == 0 && radius != 0.0 {
            return Err(Error::InvalidParameter("k = 0 has no sphere factor, radius must be 0".into()));
        }
        if k > 0 && !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        Self::build(n, k, radius, n + 1)
    }

    fn build(n: usize, k: usize, radius: f64, ambient: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("intrinsic dimension must be at least 1".into()));
        }
        if k > n {
            return Err(Error::InvalidParameter(format!("sphere index k = {k} exceeds n = {n}")));
        }
        if ambient < n + 1 {
            return Err(Error::InvalidParameter(format!("ambient dimension {ambient} < n + 1")));
        }
        Ok(Self {
            n,
            k,
            radius,
            rotation: DMatrix::identity(ambient, ambient),
            offset: DVector::zeros(ambient),
        })
    }

    /// Apply an orthogonal map about the origin.
    pub fn rotated(mut self, q: &DMatrix<f64>) -> Result<Self> {
        let dim = self.ambient_dim();
        if q.nrows() != dim || q.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("rotation must be {dim}x{dim}")));
        }
        let defect = (q.transpose() * q - DMatrix::identity(dim, dim)).amax();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        self.rotation = q * &self.rotation;
        self.offset = q * &self.offset;
        Ok(self)
    }

    /// Translate the shape; the result is never a shrinker unless `v = 0`.
    pub fn translated(mut self, v: &DVector<f64>) -> Result<Self> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch("translation length".into()));
        }
        self.offset += v;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ambient_dim(&self) -> usize {
        self.rotation.nrows()
    }

    pub fn codimension(&self) -> usize {
        self.ambient_dim() - self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn is_centered(&self) -> bool {
        self.offset.iter().all(|c| *c == 0.0)
    }

    pub fn is_shrinker(&self) -> bool {
        self.is_centered() && self.radius == (2.0 * self.k as f64).sqrt()
    }

    /// Closed (compact without boundary) exactly when it is a round sphere.
    pub fn is_compact(&self) -> bool {
        self.k == self.n
    }

    /// Smallest |x| over the shape (attained on the sphere factor for centered shapes).
    pub fn min_norm(&self) -> f64 {
        if self.is_centered() {
            self.radius
        } else {
            // offset shapes: distance from origin to the shape
            let y = self.local(&DVector::zeros(self.ambient_dim()));
            let s = self.sphere_part(&y).norm();
            let d_sphere = (s - self.radius).abs();
            let pad = self.padding_part(&y).norm();
            (d_sphere * d_sphere + pad * pad).sqrt()
        }
    }

    pub fn local(&self, x: &DVector<f64>) -> DVector<f64> {
        self.rotation.tr_mul(&(x - &self.offset))
    }

    pub fn global(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.rotation * y + &self.offset
    }

    fn sphere_part(&self, y: &DVector<f64>) -> DVector<f64> {
        y.rows(0, self.k + 1).into_owned()
    }

    fn padding_part(&self, y: &DVector<f64>) -> DVector<f64> {
        y.rows(self.n + 1, self.ambient_dim() - self.n - 1).into_owned()
    }

    /// Euclidean distance from `x` to the shape.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        let y = self.local(x);
        let d_sphere = self.sphere_part(&y).norm() - self.radius;
        let pad = self.padding_part(&y).norm_squared();
        (d_sphere * d_sphere + pad).sqrt()
    }

    /// Closest point on the shape.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.local(x);
        let s = self.sphere_part(&y);
        let norm = s.norm();
        for i in 0..=self.k {
            y[i] = if norm > 0.0 {
                self.radius * s[i] / norm
            } else if i == 0 {
                self.radius
            } else {
                0.0
            };
        }
        for i in self.n + 1..self.ambient_dim() {
            y[i] = 0.0;
        }
        self.global(&y)
    }

    /// Differential of the closest-point projection at `x` applied to `v`.
    pub fn projection_differential(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let y = self.local(x);
        let mut dv = self.rotation.tr_mul(v);
        let s = self.sphere_part(&y);
        let norm = s.norm();
        if self.k == 0 {
            dv[0] = 0.0;
        } else {
            let u = &s / norm;
            let vs = dv.rows(0, self.k + 1).into_owned();
            let tangential = &vs - &u * u.dot(&vs);
            let scaled = tangential * (self.radius / norm);
            dv.rows_mut(0, self.k + 1).copy_from(&scaled);
        }
        for i in self.n + 1..self.ambient_dim() {
            dv[i] = 0.0;
        }
        &self.rotation * dv
    }

    /// A point of the shape from sphere coordinates `direction` (unit, length k+1) and
    /// Euclidean coordinates `euclid` (length n-k).
    pub fn point(&self, direction: &[f64], euclid: &[f64]) -> DVector<f64> {
        let mut y = DVector::zeros(self.ambient_dim());
        for (i, d) in direction.iter().enumerate().take(self.k + 1) {
            y[i] = self.radius * d;
        }
        for (j, e) in euclid.iter().enumerate().take(self.n - self.k) {
            y[self.k + 1 + j] = *e;
        }
        self.global(&y)
    }

    /// Random point with |x| ≤ max_norm, uniform in the Euclidean factor's box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_norm: f64) -> Option<DVector<f64>> {
        let extent = (max_norm * max_norm - self.radius * self.radius).max(0.0).sqrt()
            + self.offset.norm();
        for _ in 0..10_000 {
            let dir = random_unit(rng, self.k + 1);
            let euclid: Vec<f64> = (0..self.n - self.k)
                .map(|_| rng.random_range(-extent..=extent))
                .collect();
            let dir = if self.k == 0 { vec![0.0] } else { dir };
            let p = self.point(&dir, &euclid);
            if p.norm() <= max_norm {
                return Some(p);
            }
        }
        None
    }

    /// The linear map G with ν(x) = G(x − offset) for the radial unit normal on the shape
    /// (zero for k = 0, where ν is constant).
    pub fn radial_normal_map(&self) -> DMatrix<f64> {
        let dim = self.ambient_dim();
        if self.k == 0 {
            return DMatrix::zeros(dim, dim);
        }
        let mut s = DMatrix::zeros(dim, dim);
        for i in 0..=self.k {
            s[(i, i)] = 1.0 / self.radius;
        }
        &self.rotation * s * self.rotation.transpose()
    }

    /// Closed-form frame, normals, second fundamental form and mean curvature at `x`.
    pub fn differential_data(&self, x: &DVector<f64>) -> Result<DifferentialData> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, shape lives in R^{}",
                x.len(),
                self.ambient_dim()
            )));
        }
        let distance = self.distance(x);
        if !(distance <= ON_SURFACE_TOL) {
            return Err(Error::PointOffSurface { distance });
        }
        let dim = self.ambient_dim();
        let y = self.local(x);
        let s = self.sphere_part(&y);
        let norm = s.norm();
        let u = if self.k == 0 || norm == 0.0 {
            let mut e = DVector::zeros(self.k + 1);
            e[0] = 1.0;
            e
        } else {
            &s / norm
        };

        let lift = |local: DVector<f64>| &self.rotation * local;
        let mut tangent_frame = Vec::with_capacity(self.n);
        for t in complement_basis(&u) {
            let mut v = DVector::zeros(dim);
            v.rows_mut(0, self.k + 1).copy_from(&t);
            tangent_frame.push(lift(v));
        }
        for j in self.k + 1..=self.n {
            let mut v = DVector::zeros(dim);
            v[j] = 1.0;
            tangent_frame.push(lift(v));
        }

        let mut nu = DVector::zeros(dim);
        nu.rows_mut(0, self.k + 1).copy_from(&u);
        let mut normal_frame = vec![lift(nu)];
        for j in self.n + 1..dim {
            let mut v = DVector::zeros(dim);
            v[j] = 1.0;
            normal_frame.push(lift(v));
        }

        // A(X, Y) = -<X, Y>/r along the radial normal for tangent vectors of the sphere factor
        let mut along_nu = DMatrix::zeros(self.n, self.n);
        if self.k > 0 {
            for i in 0..self.k {
                along_nu[(i, i)] = -1.0 / self.radius;
            }
        }
        let mut second_fundamental = vec![along_nu];
        for _ in self.n + 1..dim {
            second_fundamental.push(DMatrix::zeros(self.n, self.n));
        }
        Ok(DifferentialData::assemble(x.clone(), tangent_frame, normal_frame, second_fundamental))
    }
}

/// Orthonormal basis of the orthogonal complement of the unit vector `u`.
fn complement_basis(u: &DVector<f64>) -> Vec<DVector<f64>> {
    let m = u.len();
    let skip = u.iamax();
    let mut basis: Vec<DVector<f64>> = vec![u.clone()];
    for i in (0..m).filter(|i| *i != skip) {
        let mut v = DVector::zeros(m);
        v[i] = 1.0;
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        v /= v.norm();
        basis.push(v);
    }
    basis.remove(0);
    basis
}

pub(crate) fn random_unit<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Haar-random orthogonal matrix via QR of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// Rotation by `angle` in the plane of coordinates (i, j) of R^dim.
pub fn plane_rotation(dim: usize, i: usize, j: usize, angle: f64) -> DMatrix<f64> {
    let mut q = DMatrix::identity(dim, dim);
    let (s, c) = angle.sin_cos();
    q[(i, i)] = c;
    q[(j, j)] = c;
    q[(i, j)] = -s;
    q[(j, i)] = s;
    q
}

/// Per-point extrinsic data of an n-dimensional submanifold of R^N.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialData {
    pub point: DVector<f64>,
    pub tangent_frame: Vec<DVector<f64>>,
    /// Orthonormal basis of the normal space; the first vector is the unit normal in codimension one.
    pub normal_frame: Vec<DVector<f64>>,
    pub x_tangent: DVector<f64>,
    pub x_normal: DVector<f64>,
    pub mean_curvature: DVector<f64>,
    /// Components of A(f_i, f_j) along each vector of `normal_frame`.
    pub second_fundamental: Vec<DMatrix<f64>>,
    pub norm_a_sq: f64,
}

impl DifferentialData {
    /// Derive x^T, x^⊥, 𝐇 = tr A and |A|² from frames and the second fundamental form.
    pub fn assemble(
        point: DVector<f64>,
        tangent_frame: Vec<DVector<f64>>,
        normal_frame: Vec<DVector<f64>>,
        second_fundamental: Vec<DMatrix<f64>>,
    ) -> Self {
        let mut x_tangent = DVector::zeros(point.len());
        for f in &tangent_frame {
            x_tangent += f * f.dot(&point);
        }
        let x_normal = &point - &x_tangent;
        let mut mean_curvature = DVector::zeros(point.len());
        let mut norm_a_sq = 0.0;
        for (nu, a) in normal_frame.iter().zip(&second_fundamental) {
            mean_curvature += nu * a.trace();
            norm_a_sq += a.norm_squared();
        }
        Self { point, tangent_frame, normal_frame, x_tangent, x_normal, mean_curvature, second_fundamental, norm_a_sq }
    }

    pub fn unit_normal(&self) -> Option<&DVector<f64>> {
        (self.normal_frame.len() == 1).then(|| &self.normal_frame[0])
    }

    /// ‖𝐇 − s·x^⊥/2‖ with the calibrated sign s.
    pub fn shrinker_residual(&self) -> f64 {
        (&self.mean_curvature - &self.x_normal * (0.5 * shrinker_sign())).norm()
    }

    /// | |x^T|² + |x^⊥|² − |x|² | / max(|x|², 1).
    pub fn pythagorean_defect(&self) -> f64 {
        let lhs = self.x_tangent.norm_squared() + self.x_normal.norm_squared();
        let rhs = self.point.norm_squared();
        (lhs - rhs).abs() / rhs.max(1.0)
    }

    /// Distance between 𝐇 and the trace of A contracted with the normal frame, relative to max(|𝐇|, 1).
    pub fn trace_defect(&self) -> f64 {
        let mut trace = DVector::zeros(self.point.len());
        for (nu, a) in self.normal_frame.iter().zip(&self.second_fundamental) {
            trace += nu * a.trace();
        }
        (&trace - &self.mean_curvature).norm() / self.mean_curvature.norm().max(1.0)
    }

    /// Largest |⟨f_i, ν_a⟩| plus orthonormality defect of the combined frame.
    pub fn frame_defect(&self) -> f64 {
        let all: Vec<&DVector<f64>> = self.tangent_frame.iter().chain(&self.normal_frame).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}

/// The global sign s with 𝐇 = s·x^⊥/2 on shrinkers, calibrated once on the round
/// sphere S^2_2 where 𝐇 is computed as the trace of the second fundamental form.
pub fn shrinker_sign() -> f64 {
    static SIGN: OnceLock<f64> = OnceLock::new();
    *SIGN.get_or_init(|| {
        let sphere = GeneralizedCylinder::shrinker(2, 2).expect("S^2 is in the catalog");
        let p = sphere.point(&[0.0, 0.0, 1.0], &[]);
        let data = sphere.differential_data(&p).expect("pole lies on the sphere");
        let alignment = data.mean_curvature.dot(&data.x_normal);
        if alignment >= 0.0 {
            1.0
        } else {
            -1.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calibrated_sign_is_negative_for_trace_convention() {
        assert_eq!(shrinker_sign(), -1.0);
    }

    #[test]
    fn hyperplane_has_no_curvature() {
        let plane = GeneralizedCylinder::shrinker(2, 0).unwrap();
        let p = plane.point(&[0.0], &[0.3, -1.7]);
        let d = plane.differential_data(&p).unwrap();
        assert_eq!(d.mean_curvature.norm(), 0.0);
        assert!(d.x_normal.norm() < 1e-15);
        assert_eq!(d.norm_a_sq, 0.0);
    }

    #[test]
    fn shrinker_sphere_values() {
        for n in 1..=4 {
            let s = GeneralizedCylinder::shrinker(n, n).unwrap();
            let mut dir = vec![0.0; n + 1];
            dir[0] = 0.6;
            dir[n] = 0.8;
            let p = s.point(&dir, &[]);
            assert_relative_eq!(p.norm(), (2.0 * n as f64).sqrt(), max_relative = 1e-15);
            let d = s.differential_data(&p).unwrap();
            assert_relative_eq!(d.mean_curvature.norm(), (n as f64 / 2.0).sqrt(), max_relative = 1e-14);
            assert_relative_eq!(d.norm_a_sq, 0.5, max_relative = 1e-14);
            assert!(d.shrinker_residual() < 1e-14);
        }
    }

    #[test]
    fn round_cylinder_values() {
        let c = GeneralizedCylinder::shrinker(2, 1).unwrap();
        let p = c.point(&[0.6, 0.8], &[2.5]);
        let d = c.differential_data(&p).unwrap();
        assert_relative_eq!(d.x_normal.norm(), 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(d.mean_curvature.norm(), 2f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(d.norm_a_sq, 0.5, max_relative = 1e-14);
        assert_relative_eq!(d.x_tangent.norm(), 2.5, max_relative = 1e-14);
    }

    #[test]
    fn off_surface_point_is_rejected() {
        let c = GeneralizedCylinder::shrinker(2, 1).unwrap();
        let p = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert!(matches!(c.differential_data(&p), Err(Error::PointOffSurface { .. })));
    }

    #[test]
    fn non_shrinker_sphere_residual() {
        let s = GeneralizedCylinder::with_radius(2, 2, 2.1).unwrap();
        let p = s.point(&[0.0, 1.0, 0.0], &[]);
        let d = s.differential_data(&p).unwrap();
        assert_relative_eq!(d.shrinker_residual(), (2.0 / 2.1 - 2.1 / 2.0f64).abs(), max_relative = 1e-13);
    }

    #[test]
    fn projection_and_distance_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_rotation(&mut rng, 4);
        let c = GeneralizedCylinder::shrinker(3, 2).unwrap().rotated(&q).unwrap();
        for _ in 0..50 {
            let x = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let p = c.project(&x);
            assert!(c.distance(&p) < 1e-12);
            assert_relative_eq!((&x - &p).norm(), c.distance(&x), max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_differential_matches_finite_difference() {
        let c = GeneralizedCylinder::shrinker(2, 1).unwrap();
        let x = DVector::from_vec(vec![1.2, 0.4, 0.7]);
        let v = DVector::from_vec(vec![0.3, -0.5, 0.2]);
        let eps = 1e-6;
        let fd = (c.project(&(&x + &v * eps)) - c.project(&(&x - &v * eps))) / (2.0 * eps);
        let exact = c.projection_differential(&x, &v);
        assert!((fd - exact).norm() < 1e-8);
    }
}
