//! Numerical laboratory for self-shrinkers of mean curvature flow viewed as Gaussian
//! minimal hypersurfaces.

pub mod catalog;
pub mod certificate;
pub mod clip;
pub mod coordinate;
pub mod analytic;
pub mod curvature;
pub mod cutoff;
pub mod eigen;
pub mod frankel;
pub mod error;
pub mod functional;
pub mod growth;
pub mod io;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod report;
pub mod residual;

pub use catalog::{DifferentialData, GeneralizedCylinder};
pub use error::{Error, MeshError, Result};
pub use mesh::{build_mesh, DiscreteHypersurface, QuadratureRule};
