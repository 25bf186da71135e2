//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is singular or reflection-dominant (det = {det})")]
    ReflectionOrSingular { det: f64 },
    #[error("matrix is not a rotation (orthogonality defect {defect:.3e})")]
    NotARotation { defect: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("adaptive step size underflowed at t = {time}")]
    StepUnderflow { time: f64 },
    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("degenerate time span [{t0}, {t1}]")]
    DegenerateSpan { t0: f64, t1: f64 },
    #[error("invalid stepper parameter: {0}")]
    BadSpec(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("principal inertias must satisfy 0 < I1 <= I2 <= I3, got {0:?}")]
    InertiaOrder([f64; 3]),
    #[error("rolling radius must be nonzero")]
    ZeroRadius,
    #[error("a + b = 0: kappa undefined and the reduced metric degenerates")]
    KappaUndefined,
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state violates the no-twist constraint: |(A~^-1 L, gamma)| = {residual:.3e}")]
    OffConstraint { residual: f64 },
    #[error("marble inertia inversion degenerate: 1 - mu r^2 (gamma, A~^-1 gamma) = {denominator:.3e}")]
    DegenerateInversion { denominator: f64 },
    #[error("Chaplygin measure density undefined: F(gamma) = {value:.3e} <= 0")]
    NonPositiveDensity { value: f64 },
    #[error("|gamma| = {norm} is too far from 1")]
    GammaNotUnit { norm: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("arclength {s} outside the sampled range [{min}, {max}]")]
    OutOfRange { s: f64, min: f64, max: f64 },
    #[error("curve has a degenerate (zero-speed or duplicate) sample near index {index}")]
    DegenerateSample { index: usize },
    #[error("frame is not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("initial data inconsistent: {0}")]
    InconsistentInitialData(String),
    #[error("a spherical curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("point at index {index} is not on the sphere of radius {radius}")]
    OffSphere { index: usize, radius: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpheroConicalError {
    #[error("inertias must be strictly separated by at least {min_gap:.1e}")]
    InertiasTooClose { min_gap: f64 },
    #[error("interlacing I1 < l1 < I2 < l2 < I3 violated: lambda = ({l1}, {l2})")]
    InterlacingViolated { l1: f64, l2: f64 },
    #[error("gamma lies on a coordinate plane (component {component} vanishes): sphero-conical chart degenerate")]
    BoundaryDegeneracy { component: usize },
    #[error("trajectory reached the lambda-domain boundary at tau = {tau}")]
    BoundaryReached { tau: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}
