//! Test functions w = ηφ violating the Gaussian Poincaré inequality
//! ∫w² e^{−|x|²/4} ≤ 2∫|∇w|² e^{−|x|²/4}, and the numerical search for R_n.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::CatalogPiece;
use crate::catalog::GeneralizedCylinder;
use crate::cutoff::{build_cutoff, cutoff_energy, CutoffEnergy, SingularSetProxy};
use crate::error::{Error, Result};
use crate::functional::gaussian_weight;
use crate::growth::ball_volume;
use crate::mesh::DiscreteHypersurface;
use crate::operators::WeightedOperators;

/// η(|x|): one on B_{r2−1}, linear down to zero at r2.
pub fn radial_profile(norm: f64, r2: f64) -> f64 {
    (r2 - norm).clamp(0.0, 1.0)
}

/// η at every vertex of the mesh.
pub fn radial_cutoff(mesh: &DiscreteHypersurface, r2: f64) -> Result<Vec<f64>> {
    let domain = mesh.domain_radius();
    if r2 > domain * (1.0 + 1e-12) {
        return Err(Error::RadiusExceedsDomain { radius: r2, domain });
    }
    if !(r2 > 1.0) {
        return Err(Error::InvalidParameter(format!("r2 = {r2} must exceed 1")));
    }
    Ok(mesh.vertices().iter().map(|v| radial_profile(v.norm(), r2)).collect())
}

/// e^{−r1²/4}V(r1) ≤ 4e^{−(r2−1)²/4}V(r2), the inequality a stable piece would satisfy
/// as ε → 0. `fails` means the volumes alone already contradict stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub fails: bool,
}

impl VolumeComparison {
    pub fn new(r1: f64, r2: f64, v1: f64, v2: f64) -> Self {
        let lhs = gaussian_weight(r1 * r1) * v1;
        let rhs = 4.0 * gaussian_weight((r2 - 1.0) * (r2 - 1.0)) * v2;
        Self { lhs, rhs, fails: lhs > rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityCertificate {
    pub r1: f64,
    pub r2: f64,
    /// Cutoff radius around S; `None` when S is empty.
    pub rho: Option<f64>,
    pub epsilon: f64,
    /// ∫w² e^{−|x|²/4}.
    pub mass: f64,
    /// ∫|∇w|² e^{−|x|²/4}.
    pub energy: f64,
    pub margin: f64,
    pub fires: bool,
    pub cutoff: CutoffEnergy,
    /// Both cutoff energies are at most ε.
    pub cutoff_within_epsilon: bool,
    pub comparison: VolumeComparison,
    #[serde(skip)]
    pub field: Vec<f64>,
}

fn check_radii(n: usize, r1: f64, r2: f64, domain: f64) -> Result<()> {
    let floor = (4.0 + 2.0 * n as f64).sqrt();
    if r1 < floor {
        return Err(Error::Precondition(format!("r1 = {r1} is below sqrt(4 + 2n) = {floor}")));
    }
    if !(r2 > r1 + 1.0) {
        return Err(Error::Precondition(format!("r2 = {r2} must exceed r1 + 1 = {}", r1 + 1.0)));
    }
    if r2 > domain * (1.0 + 1e-12) {
        return Err(Error::RadiusExceedsDomain { radius: r2, domain });
    }
    Ok(())
}

/// Certificate for a mesh piece with singular-set proxy S (possibly empty).
pub fn certify_instability(
    mesh: &DiscreteHypersurface,
    r1: f64,
    r2: f64,
    proxy: &SingularSetProxy,
    epsilon: f64,
) -> Result<InstabilityCertificate> {
    check_radii(mesh.dim(), r1, r2, mesh.domain_radius())?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let eta = radial_cutoff(mesh, r2)?;
    let phi = build_cutoff(mesh, proxy)?;
    let cutoff = cutoff_energy(mesh, &phi)?;
    let field: Vec<f64> = eta
        .iter()
        .zip(&phi.values)
        .zip(mesh.boundary_vertices())
        .map(|((e, p), &b)| if b { 0.0 } else { e * p })
        .collect();
    let ops = WeightedOperators::assemble(mesh);
    let mass = ops.mass_inner(&field, &field);
    let energy = ops.dirichlet_form(&field, &field).max(0.0);
    let margin = mass - 2.0 * energy;
    let comparison = VolumeComparison::new(r1, r2, ball_volume(mesh, r1), ball_volume(mesh, r2));
    Ok(InstabilityCertificate {
        r1,
        r2,
        rho: (!proxy.points().is_empty()).then(|| proxy.rho()),
        epsilon,
        mass,
        energy,
        margin,
        fires: margin > 0.0,
        cutoff,
        cutoff_within_epsilon: cutoff.dirichlet <= epsilon && cutoff.deficiency <= epsilon,
        comparison,
        field,
    })
}

/// Certificate for a catalog piece with S empty, by exact radial integrals. The tangential
/// gradient of η has norm |x^T|/|x| on the band r2 − 1 < |x| < r2.
pub fn certify_catalog(piece: &CatalogPiece, r1: f64, r2: f64) -> Result<InstabilityCertificate> {
    check_radii(piece.n(), r1, r2, piece.radius())?;
    let inner = r2 - 1.0;
    let mass = piece.radial_integral(inner, |s, _| gaussian_weight(s * s))
        + piece.shell_integral(inner, r2, |s, _| radial_profile(s, r2).powi(2) * gaussian_weight(s * s));
    let energy = piece.shell_integral(inner, r2, |s, t| (t / s).powi(2) * gaussian_weight(s * s));
    let margin = mass - 2.0 * energy;
    Ok(InstabilityCertificate {
        r1,
        r2,
        rho: None,
        epsilon: 0.0,
        mass,
        energy,
        margin,
        fires: margin > 0.0,
        cutoff: CutoffEnergy { dirichlet: 0.0, deficiency: 0.0 },
        cutoff_within_epsilon: true,
        comparison: VolumeComparison::new(r1, r2, piece.volume(r1), piece.volume(r2)),
        field: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnRow {
    pub k: usize,
    pub r_star: f64,
    pub certificate: InstabilityCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnEstimate {
    pub n: usize,
    pub step: f64,
    pub cap: f64,
    pub rows: Vec<RnRow>,
    /// max_k R*(n, k).
    pub rn_hat: f64,
}

impl RnEstimate {
    /// `n,k,Rstar,r1,r2,mass,energy,margin` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,k,Rstar,r1,r2,mass,energy,margin\n");
        for row in &self.rows {
            let c = &row.certificate;
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.n, row.k, row.r_star, c.r1, c.r2, c.mass, c.energy, c.margin
            );
        }
        out
    }
}

/// Smallest radius of the grid {step·j} at which the catalog certificate fires, for every
/// k = 0..=n, with r1 = √(4+2n).
pub fn estimate_rn(n: usize, step: f64, cap: f64) -> Result<RnEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(step > 0.0 && step <= 0.25) {
        return Err(Error::InvalidParameter(format!("grid step {step} must lie in (0, 0.25]")));
    }
    let r1 = (4.0 + 2.0 * n as f64).sqrt();
    let grid: Vec<f64> = (1..)
        .map(|j| step * j as f64)
        .take_while(|r| *r <= cap * (1.0 + 1e-12))
        .filter(|r| *r > r1 + 1.0)
        .collect();
    let pairs: Vec<(usize, f64)> = (0..=n).flat_map(|k| grid.iter().map(move |&r| (k, r))).collect();
    let certs: Vec<(usize, InstabilityCertificate)> = pairs
        .par_iter()
        .map(|&(k, r2)| {
            let piece = CatalogPiece::new(GeneralizedCylinder::shrinker(n, k)?, r2)?;
            Ok((k, certify_catalog(&piece, r1, r2)?))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let first = certs
            .iter()
            .filter(|(kk, c)| *kk == k && c.fires)
            .min_by(|a, b| a.1.r2.total_cmp(&b.1.r2))
            .ok_or(Error::NoFiringRadius { n, k, cap })?;
        rows.push(RnRow { k, r_star: first.1.r2, certificate: first.1.clone() });
    }
    let rn_hat = rows.iter().map(|r| r.r_star).fold(0.0, f64::max);
    Ok(RnEstimate { n, step, cap, rows, rn_hat })
}

/// Every grid pair (r1 = √(4+2n), r2) up to `cap` at which the catalog certificate fires,
/// together with the volume comparison there.
pub fn firing_pairs(n: usize, k: usize, step: f64, cap: f64) -> Result<Vec<InstabilityCertificate>> {
    let r1 = (4.0 + 2.0 * n as f64).sqrt();
    let shape = GeneralizedCylinder::shrinker(n, k)?;
    let grid: Vec<f64> = (1..)
        .map(|j| step * j as f64)
        .take_while(|r| *r <= cap * (1.0 + 1e-12))
        .filter(|r| *r > r1 + 1.0)
        .collect();
    let certs: Vec<InstabilityCertificate> = grid
        .par_iter()
        .map(|&r2| certify_catalog(&CatalogPiece::new(shape.clone(), r2)?, r1, r2))
        .collect::<Result<_>>()?;
    Ok(certs.into_iter().filter(|c| c.fires).collect())
}
