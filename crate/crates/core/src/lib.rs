//! Dynamics of a balanced, dynamically asymmetric sphere rolling without
//! slipping or twisting ("rubber rolling") over a fixed sphere or plane,
//! with the twist-allowed "marble" family and the unconstrained "skiding"
//! baseline for comparison.
//!
//! The crate covers the full body-frame equations, adapted frames and curve
//! invariants on spheres, the reduction of the rubber system to the sphere
//! (connection, curvature, holonomy, momentum pairing, reduced Legendre
//! data), the conformally symplectic structure of the reduced 2-form, and
//! sphero-conical coordinates with the Darboux form in rescaled time,
//! together with a registry of numerical verifications for all of it.

pub mod body;
pub mod chaplygin;
pub mod config;
pub mod dual;
pub mod error;
pub mod frames;
pub mod ode;
pub mod run;
pub mod sample;
pub mod so3;
pub mod spheroconical;
pub mod tol;
pub mod verify;

pub use body::{BaseSurface, BodyParams, FullState, SceneParams};
pub use error::{DynamicsError, FrameError, OdeError, ParamError, So3Error, SpheroConicalError};
pub use frames::{FrameInvariants, SphericalCurve};
pub use ode::{Method, StepperSpec};
pub use so3::{hat, project_rotation, vee, Mat3, Rot3, Vec3};
pub use spheroconical::{DarbouxState, Octant, SpheroConicalPoint};
