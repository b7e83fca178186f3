use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no integral certificate rho with <w_i, rho> = 1 exists")]
    NoCertificate,
    #[error("pairing violation: <v_{i}, w_{j}> = {value}")]
    PairingViolation { i: usize, j: usize, value: i64 },
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("fiber meets the zero set near a quadrature node at x = {0:?}")]
    SingularFiber(Vec<f64>),
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("{which} is not positive definite at {point:?}")]
    NotPositiveDefinite { which: String, point: Vec<f64> },
    #[error("point {0:?} is outside the domain")]
    DomainViolation(Vec<f64>),
    #[error("finite-difference step too large: Richardson disagreement {disagreement:e} at {point:?}")]
    StepTooLarge { disagreement: f64, point: Vec<f64> },
    #[error("sphere meets the discriminant")]
    SphereHitsDiscriminant,
    #[error("point lies on the discriminant")]
    OnDiscriminant,
    #[error("potential is not convex at {0:?}")]
    NotConvex(Vec<f64>),
    #[error("argument must be positive, got {0}")]
    NonpositiveArgument(f64),
    #[error("field is not positive at {0:?}")]
    NotPositive(Vec<f64>),
    #[error("singular Hessian block at {0:?}")]
    SingularHessian(Vec<f64>),
    #[error("function is not harmonic: Laplacian {laplacian:e} at {point:?}")]
    NotHarmonic { laplacian: f64, point: Vec<f64> },
    #[error("loop passes through the singular support")]
    LoopHitsSingularity,
    #[error("aliasing: cutoff energy ratio {0:e}")]
    AliasingDetected(f64),
    #[error("insufficient points for fit: {got} < {needed}")]
    InsufficientPoints { got: usize, needed: usize },
    #[error("solution carries no potential: {0}")]
    NoPotential(String),
}

pub type Result<T> = std::result::Result<T, Error>;
