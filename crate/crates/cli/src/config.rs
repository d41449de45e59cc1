use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use shrinkerlab::catalog::random_rotation;
use shrinkerlab::GeneralizedCylinder;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Catalog,
    Residual,
    Area,
    Growth,
    Cutoff,
    Certify,
    RnSweep,
    Frankel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Plane,
    Sphere,
    Cylinder,
}

/// Numerical laboratory for self-shrinkers as Gaussian minimal hypersurfaces.
///
/// Every artifact embeds this configuration. Exit status: 0 when all checks pass, 1 when a
/// check fails, 2 on configuration errors.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "shrinkerlab", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long, value_enum, default_value = "plane")]
    pub shape: Shape,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Sphere dimension; defaults to 0 for planes, n for spheres and 1 for cylinders.
    #[arg(long)]
    pub k: Option<usize>,
    /// Apply a random rotation drawn from --seed to the shape.
    #[arg(long)]
    pub rotate: bool,
    /// Construction radius of the piece.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    /// Mesh size; commands use the analytic path when it is absent and the shape allows it.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Cutoff scale for the singular-set proxy.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Upper end of the radius grid for rn-sweep.
    #[arg(long, default_value_t = 20.0)]
    pub cap: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input surface in the SHRNK format, used instead of a catalog mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Second SHRNK surface for frankel.
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Write the generated catalog mesh to this path (catalog command).
    #[arg(long)]
    pub emit_mesh: Option<PathBuf>,
    /// Radius of the closed ball that must contain the connecting segment (frankel).
    #[arg(long)]
    pub core_radius: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        let positive = [
            ("R", self.big_r),
            ("h", self.h),
            ("r1", self.r1),
            ("r2", self.r2),
            ("rmax", self.rmax),
            ("step", self.step),
            ("rho", self.rho),
            ("tol", self.tol),
            ("core-radius", self.core_radius),
            ("cap", Some(self.cap)),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Failure::config(format!("--{name} must be positive and finite, got {v}")));
                }
            }
        }
        if self.n == 0 {
            return Err(Failure::config("--n must be at least 1"));
        }
        self.k()?;
        Ok(())
    }

    pub fn k(&self) -> Result<usize, Failure> {
        let k = match (self.shape, self.k) {
            (Shape::Plane, None | Some(0)) => 0,
            (Shape::Sphere, None) => self.n,
            (Shape::Sphere, Some(k)) if k == self.n => k,
            (Shape::Cylinder, None) => 1,
            (Shape::Cylinder, Some(k)) => k,
            (shape, Some(k)) => {
                return Err(Failure::config(format!("--k {k} is inconsistent with --shape {shape:?}")));
            }
        };
        if k > self.n {
            return Err(Failure::config(format!("--k {k} exceeds --n {}", self.n)));
        }
        Ok(k)
    }

    /// The catalog shrinker selected by --shape, --n, --k and --rotate.
    pub fn shape(&self) -> Result<GeneralizedCylinder, Failure> {
        let shape = GeneralizedCylinder::shrinker(self.n, self.k()?)?;
        if !self.rotate {
            return Ok(shape);
        }
        let mut rng = self.rng();
        let q = random_rotation(&mut rng, shape.ambient_dim());
        Ok(shape.rotated(&q)?)
    }

    pub fn rng(&self) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn radius_or(&self, default: f64) -> f64 {
        self.big_r.unwrap_or(default)
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
