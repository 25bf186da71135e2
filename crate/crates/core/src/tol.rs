//! Default step sizes, tolerances and finite-difference conventions.
//!
//! Every numerical default used by the library is named here so that the
//! verification suite and the documentation agree on one table.

/// Fixed RK4 step in nondimensional time.
pub const DEFAULT_DT: f64 = 1e-3;

/// Absolute tolerance for the embedded RK45 stepper.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Relative tolerance for the embedded RK45 stepper.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Residual of `(A_tilde^-1 L, gamma)` above which a state is rejected as
/// off the no-twist constraint manifold.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Orthogonality defect `|R^T R - I|` above which a matrix is not accepted
/// as a rotation without projection.
pub const ROTATION_TOL: f64 = 1e-9;

/// Central-difference step for divergence and gradient checks over
/// `(gamma, L)`: `h = FD_SCALE * max(1, |coordinate|)`, applied per
/// coordinate with the field formulas extended verbatim off the sphere.
pub const FD_SCALE: f64 = 1e-6;

/// Outer central-difference step for the exterior-derivative (closedness)
/// check; the inner derivatives of the momentum coefficients are exact
/// (forward-mode duals), so only this step limits accuracy.
pub const EXTERIOR_FD_STEP: f64 = 1e-5;

/// Polar-angle exclusion zone around the spherical-chart poles; sample
/// points closer than this to 0 or pi are redrawn.
pub const CHART_POLE_MARGIN: f64 = 0.1;

/// Minimum gap between principal inertias required by the sphero-conical
/// coordinate routines.
pub const INERTIA_MIN_GAP: f64 = 1e-9;

/// Distance of a sphero-conical coordinate to the inertia spectrum at which
/// Darboux integration stops with a boundary event.
pub const LAMBDA_BOUNDARY_EPS: f64 = 1e-8;

/// Step used when reconstructing a spherical curve from its geodesic
/// curvature (round-trip residual target 1e-6).
pub const RECONSTRUCT_DS: f64 = 1e-4;

/// Finite-difference step floor for curve-invariant extraction; the actual
/// step is `max(CURVE_FD_FLOOR, 10 * sample spacing)`.
pub const CURVE_FD_FLOOR: f64 = 1e-4;

/// Default seed for all randomized verification batches.
pub const DEFAULT_SEED: u64 = 42;

/// Substep count for the numerical holonomy loop integration.
pub const HOLONOMY_LOOP_STEPS: usize = 200_000;
