use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies {distance:.3e} off the surface (tolerance 1e-9)")]
    PointOffSurface { distance: f64 },

    #[error("unsupported dimension n = {0}: meshes exist only for n = 1 and n = 2")]
    UnsupportedDimension(usize),

    #[error("ball of radius {radius} misses the shape (needs radius > {needed})")]
    RadiusTooSmall { radius: f64, needed: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vertex {vertex} has a degenerate star ({incident} incident simplices)")]
    DegenerateStar { vertex: usize, incident: usize },

    #[error("lumped mass at vertex {vertex} is not positive ({mass:e})")]
    SingularMass { vertex: usize, mass: f64 },

    #[error("second fundamental form is unavailable for this surface")]
    MissingCurvature,

    #[error("field vanishes identically")]
    ZeroField,

    #[error("field does not vanish on boundary vertex {vertex}")]
    NotDirichlet { vertex: usize },

    #[error("field has {got} values, surface has {expected} vertices")]
    FieldLength { expected: usize, got: usize },

    #[error("radius {radius} exceeds the construction radius {domain}")]
    RadiusExceedsDomain { radius: f64, domain: f64 },

    #[error("radius {0} is not a regular value of |x| on this surface")]
    NonRegularRadius(f64),

    #[error("rho = {rho} must be below 1/(3R) = {bound}")]
    RhoTooLarge { rho: f64, bound: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("surface {which} does not meet the closed ball of radius {core_radius} (distance {distance})")]
    SurfaceMissesCoreBall { which: usize, core_radius: f64, distance: f64 },

    #[error("boundary data leaves the obstacle region at vertex {vertex}")]
    InfeasibleBoundary { vertex: usize },

    #[error("no firing radius below the cap {cap} for n = {n}, k = {k}")]
    NoFiringRadius { n: usize, k: usize, cap: f64 },

    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
}

/// Structural problems of a simplicial mesh, with the offending line when read from a file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("line {line}: vertex index {index} out of range (vertex count {count})")]
    IndexOutOfRange { line: usize, index: usize, count: usize },

    #[error("line {line}: degenerate simplex {simplex}")]
    DegenerateSimplex { line: usize, simplex: usize },

    #[error("inconsistent orientation across facet {facet:?}")]
    InconsistentOrientation { facet: Vec<usize> },

    #[error("facet {facet:?} is shared by more than two simplices")]
    NonManifold { facet: Vec<usize> },
}
