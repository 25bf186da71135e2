//! Full-space equations of motion in body variables: rubber (no slip, no
//! twist), the marble kappa-family (no slip only), and skiding (touching
//! only), plus their conserved quantities and invariant-measure densities.
//!
//! Conventions: a single signed rolling radius `b` (negative for internal
//! contact), `kappa = a/(a+b)`, Poisson vector `gamma` the base normal seen
//! in the body frame, `L` the angular momentum about the contact point in
//! the body frame.

use crate::error::{DynamicsError, ParamError};
use crate::ode::{integrate, StepperSpec};
use crate::so3::{hat, project_rotation, Mat3, Rot3, Vec3};
use crate::tol;

/// Mass, principal inertias and signed rolling-sphere radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    pub mass: f64,
    pub inertia: [f64; 3],
    /// Signed rolling radius; negative encodes internal contact.
    pub radius: f64,
}

impl BodyParams {
    pub fn new(mass: f64, inertia: [f64; 3], radius: f64) -> Result<Self, ParamError> {
        for (name, v) in [("mass", mass), ("I1", inertia[0]), ("I2", inertia[1]), ("I3", inertia[2]), ("b", radius)] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite { name });
            }
        }
        if mass <= 0.0 {
            return Err(ParamError::NotPositive { name: "mass", value: mass });
        }
        if !(inertia[0] > 0.0 && inertia[0] <= inertia[1] && inertia[1] <= inertia[2]) {
            return Err(ParamError::InertiaOrder(inertia));
        }
        if radius == 0.0 {
            return Err(ParamError::ZeroRadius);
        }
        Ok(BodyParams { mass, inertia, radius })
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::diag(self.inertia)
    }

    /// `A + mu r^2 Id` for contact radius `r`.
    pub fn a_tilde_with(&self, r: f64) -> Mat3 {
        Mat3::diag([
            self.inertia[0] + self.mass * r * r,
            self.inertia[1] + self.mass * r * r,
            self.inertia[2] + self.mass * r * r,
        ])
    }

    /// `A + mu b^2 Id` with the body's own rolling radius.
    pub fn a_tilde(&self) -> Mat3 {
        self.a_tilde_with(self.radius)
    }

    /// Solves `A~ x = v` (diagonal).
    pub fn a_tilde_solve(&self, r: f64, v: Vec3) -> Vec3 {
        let c = self.mass * r * r;
        Vec3::new(
            v.x / (self.inertia[0] + c),
            v.y / (self.inertia[1] + c),
            v.z / (self.inertia[2] + c),
        )
    }
}

/// The fixed base surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseSurface {
    Sphere { radius: f64 },
    /// The `a -> infinity` limit: `kappa = 1`, `b/a = 0`.
    Plane,
}

/// The rolling scene: base surface plus the derived ratios that the
/// equations actually use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    base: BaseSurface,
    kappa: f64,
    ratio: f64,
}

impl SceneParams {
    pub fn new(base: BaseSurface, body: &BodyParams) -> Result<Self, ParamError> {
        match base {
            BaseSurface::Plane => Ok(SceneParams { base, kappa: 1.0, ratio: 0.0 }),
            BaseSurface::Sphere { radius: a } => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(ParamError::NotPositive { name: "base radius", value: a });
                }
                if (a + body.radius).abs() < 1e-12 * a {
                    return Err(ParamError::KappaUndefined);
                }
                Ok(SceneParams { base, kappa: a / (a + body.radius), ratio: body.radius / a })
            }
        }
    }

    pub fn base(&self) -> BaseSurface {
        self.base
    }

    pub fn base_radius(&self) -> Option<f64> {
        match self.base {
            BaseSurface::Sphere { radius } => Some(radius),
            BaseSurface::Plane => None,
        }
    }

    /// `kappa = a/(a+b)`; 1 for the plane.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `b/a`; 0 for the plane.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn one_plus_ratio(&self) -> f64 {
        1.0 + self.ratio
    }

    /// Conformal exponent `(b - a)/(2a) = (b/a - 1)/2`; `-1/2` for the plane.
    pub fn exponent(&self) -> f64 {
        (self.ratio - 1.0) / 2.0
    }
}

/// Full constrained phase point `(R, gamma, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub attitude: Rot3,
    pub gamma: Vec3,
    pub momentum: Vec3,
}

impl FullState {
    pub fn to_array(&self) -> [f64; 15] {
        let m = self.attitude.matrix().0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            self.gamma.x, self.gamma.y, self.gamma.z,
            self.momentum.x, self.momentum.y, self.momentum.z,
        ]
    }

    pub fn from_array(a: &[f64; 15]) -> FullState {
        let m = Mat3([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]]);
        FullState {
            attitude: Rot3::try_new(m).unwrap_or_else(|_| {
                project_rotation(m).expect("attitude matrix not projectable")
            }),
            gamma: Vec3::new(a[9], a[10], a[11]),
            momentum: Vec3::new(a[12], a[13], a[14]),
        }
    }

    pub fn check_gamma_unit(&self) -> Result<(), DynamicsError> {
        let n = self.gamma.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(DynamicsError::GammaNotUnit { norm: n });
        }
        Ok(())
    }
}

/// Time derivative of a full state.
#[derive(Debug, Clone, Copy)]
pub struct FullStateRate {
    pub attitude_rate: Mat3,
    pub gamma_rate: Vec3,
    pub momentum_rate: Vec3,
}

// ---------------------------------------------------------------------------
// rubber family
// ---------------------------------------------------------------------------

/// Rubber inverse inertia map: `Omega = A~^-1 L`, valid on the no-twist
/// constraint manifold; errors when the constraint residual is large.
pub fn omega_from_momentum_rubber(
    momentum: Vec3,
    gamma: Vec3,
    body: &BodyParams,
) -> Result<Vec3, DynamicsError> {
    let omega = body.a_tilde_solve(body.radius, momentum);
    let residual = omega.dot(gamma).abs();
    let scale = omega.norm().max(1.0);
    if residual > tol::CONSTRAINT_TOL * scale {
        return Err(DynamicsError::OffConstraint { residual });
    }
    Ok(omega)
}

/// Residual of the no-twist constraint `(A~^-1 L, gamma)`.
pub fn rubber_constraint_residual(momentum: Vec3, gamma: Vec3, body: &BodyParams) -> f64 {
    body.a_tilde_solve(body.radius, momentum).dot(gamma)
}

/// Minimal correction `L <- L - ((A~^-1 L, g)/(A~^-1 g, g)) g` putting `L`
/// back on the constraint manifold.
pub fn project_momentum_to_constraint(momentum: Vec3, gamma: Vec3, body: &BodyParams) -> Vec3 {
    let ail = body.a_tilde_solve(body.radius, momentum);
    let aig = body.a_tilde_solve(body.radius, gamma);
    momentum - gamma * (ail.dot(gamma) / aig.dot(gamma))
}

/// Constraint multiplier
/// `tau = [(A~^-1 L x L, A~^-1 g) + kappa (A~^-1 L, A~^-1 L x g)] / (g, A~^-1 g)`.
///
/// The second term is a vanishing triple product and is kept for fidelity
/// with the published expression; the first term alone sets the multiplier.
pub fn rubber_multiplier(momentum: Vec3, gamma: Vec3, body: &BodyParams, kappa: f64) -> f64 {
    let ail = body.a_tilde_solve(body.radius, momentum);
    let aig = body.a_tilde_solve(body.radius, gamma);
    let num = ail.cross(momentum).dot(aig) + kappa * ail.dot(ail.cross(gamma));
    num / gamma.dot(aig)
}

/// Rubber equations of motion:
/// `R' = R [Omega]`, `gamma' = kappa gamma x Omega`, `L' = tau gamma - Omega x L`.
pub fn rubber_rate(
    state: &FullState,
    body: &BodyParams,
    scene: &SceneParams,
) -> Result<FullStateRate, DynamicsError> {
    state.check_gamma_unit()?;
    let omega = omega_from_momentum_rubber(state.momentum, state.gamma, body)?;
    Ok(rubber_rate_unchecked(state, body, scene, omega))
}

fn rubber_rate_unchecked(
    state: &FullState,
    body: &BodyParams,
    scene: &SceneParams,
    omega: Vec3,
) -> FullStateRate {
    let kappa = scene.kappa();
    let tau = rubber_multiplier(state.momentum, state.gamma, body, kappa);
    FullStateRate {
        attitude_rate: state.attitude.matrix() * hat(omega),
        gamma_rate: state.gamma.cross(omega) * kappa,
        momentum_rate: state.gamma * tau - omega.cross(state.momentum),
    }
}

/// Rubber energy `H = (L, A~^-1 L)/2`.
pub fn rubber_energy(state: &FullState, body: &BodyParams) -> f64 {
    0.5 * state.momentum.dot(body.a_tilde_solve(body.radius, state.momentum))
}

// ---------------------------------------------------------------------------
// marble family
// ---------------------------------------------------------------------------

/// Marble inverse inertia map:
/// `Omega = A~^-1 L + alpha A~^-1 gamma` with
/// `alpha = mu r^2 (g, A~^-1 L) / (1 - mu r^2 (g, A~^-1 g))`.
pub fn omega_from_momentum_marble(
    momentum: Vec3,
    gamma: Vec3,
    body: &BodyParams,
    contact_radius: f64,
) -> Result<Vec3, DynamicsError> {
    let mu_r2 = body.mass * contact_radius * contact_radius;
    let ail = body.a_tilde_solve(contact_radius, momentum);
    let aig = body.a_tilde_solve(contact_radius, gamma);
    let denominator = 1.0 - mu_r2 * gamma.dot(aig);
    if denominator.abs() < 1e-12 {
        return Err(DynamicsError::DegenerateInversion { denominator });
    }
    let alpha = mu_r2 * gamma.dot(ail) / denominator;
    Ok(ail + aig * alpha)
}

/// Forward map `L = A Omega + mu Q x (Omega x Q)` with `Q = r gamma`.
pub fn momentum_from_omega_marble(
    omega: Vec3,
    gamma: Vec3,
    body: &BodyParams,
    contact_radius: f64,
) -> Vec3 {
    let q = gamma * contact_radius;
    body.inertia_matrix() * omega + q.cross(omega.cross(q)) * body.mass
}

/// Marble equations of motion:
/// `R' = R [Omega]`, `gamma' = kappa gamma x Omega`, `L' = L x Omega`.
pub fn marble_rate(
    state: &FullState,
    body: &BodyParams,
    scene: &SceneParams,
    contact_radius: f64,
) -> Result<FullStateRate, DynamicsError> {
    state.check_gamma_unit()?;
    let omega = omega_from_momentum_marble(state.momentum, state.gamma, body, contact_radius)?;
    Ok(FullStateRate {
        attitude_rate: state.attitude.matrix() * hat(omega),
        gamma_rate: state.gamma.cross(omega) * scene.kappa(),
        momentum_rate: state.momentum.cross(omega),
    })
}

/// The four classical integrals `f1 = (L, Omega)`, `f2 = (L, L)`,
/// `f3 = (gamma, gamma)`, `f4 = (L, gamma)`; `f4` is conserved only for
/// `kappa = 1`.
pub fn marble_integrals(
    state: &FullState,
    body: &BodyParams,
    contact_radius: f64,
) -> Result<[f64; 4], DynamicsError> {
    let omega = omega_from_momentum_marble(state.momentum, state.gamma, body, contact_radius)?;
    Ok([
        state.momentum.dot(omega),
        state.momentum.dot(state.momentum),
        state.gamma.dot(state.gamma),
        state.momentum.dot(state.gamma),
    ])
}

/// Chaplygin's measure function `F(gamma) = 1/(mu r^2) - (gamma, A~^-1 gamma)`
/// and the invariant density `F^(-1/2)`.
pub fn marble_measure_density(
    gamma: Vec3,
    body: &BodyParams,
    contact_radius: f64,
) -> Result<(f64, f64), DynamicsError> {
    let mu_r2 = body.mass * contact_radius * contact_radius;
    let f = 1.0 / mu_r2 - gamma.dot(body.a_tilde_solve(contact_radius, gamma));
    if f <= 0.0 {
        return Err(DynamicsError::NonPositiveDensity { value: f });
    }
    Ok((f, f.powf(-0.5)))
}

/// The `(gamma, L)` part of the marble field, extended verbatim to ambient
/// R^3 x R^3 for divergence checks.
fn marble_ambient_field(
    z: &[f64; 6],
    body: &BodyParams,
    contact_radius: f64,
    kappa: f64,
    weighted: bool,
) -> [f64; 6] {
    let gamma = Vec3::new(z[0], z[1], z[2]);
    let momentum = Vec3::new(z[3], z[4], z[5]);
    let omega = omega_from_momentum_marble(momentum, gamma, body, contact_radius)
        .expect("ambient point too close to the degenerate inversion locus");
    let weight = if weighted {
        let mu_r2 = body.mass * contact_radius * contact_radius;
        let f = 1.0 / mu_r2 - gamma.dot(body.a_tilde_solve(contact_radius, gamma));
        f.powf(-0.5)
    } else {
        1.0
    };
    let gd = gamma.cross(omega) * (kappa * weight);
    let ld = momentum.cross(omega) * weight;
    [gd.x, gd.y, gd.z, ld.x, ld.y, ld.z]
}

/// Central-difference divergence over `(gamma, L)` of
/// `F^(-1/2) (kappa gamma x Omega, L x Omega)`; vanishes identically when
/// the measure is invariant.
pub fn marble_measure_divergence(
    gamma: Vec3,
    momentum: Vec3,
    body: &BodyParams,
    contact_radius: f64,
    kappa: f64,
) -> f64 {
    let z0 = [gamma.x, gamma.y, gamma.z, momentum.x, momentum.y, momentum.z];
    let mut div = 0.0;
    for i in 0..6 {
        let h = tol::FD_SCALE * z0[i].abs().max(1.0);
        let mut zp = z0;
        zp[i] += h;
        let mut zm = z0;
        zm[i] -= h;
        let fp = marble_ambient_field(&zp, body, contact_radius, kappa, true);
        let fm = marble_ambient_field(&zm, body, contact_radius, kappa, true);
        div += (fp[i] - fm[i]) / (2.0 * h);
    }
    div
}

/// Both sides of the two divergence identities behind the invariant
/// measure, left sides by central differences:
/// `div_g(gamma x Omega) = (gamma x A~^-1 gamma, A~^-1 L)/F` and
/// `(grad F, gamma x Omega) = 2 (gamma x A~^-1 gamma, A~^-1 L)`.
pub fn divergence_identities(
    gamma: Vec3,
    momentum: Vec3,
    body: &BodyParams,
    contact_radius: f64,
) -> (f64, f64, f64, f64) {
    let mu_r2 = body.mass * contact_radius * contact_radius;
    let f_of = |g: Vec3| 1.0 / mu_r2 - g.dot(body.a_tilde_solve(contact_radius, g));
    let field = |g: Vec3| {
        g.cross(omega_from_momentum_marble(momentum, g, body, contact_radius).unwrap())
    };
    let z0 = gamma.to_array();
    let mut lhs_div = 0.0;
    let mut grad_f = Vec3::ZERO;
    for i in 0..3 {
        let h = tol::FD_SCALE * z0[i].abs().max(1.0);
        let mut zp = z0;
        zp[i] += h;
        let mut zm = z0;
        zm[i] -= h;
        let (gp, gm) = (Vec3::from_array(zp), Vec3::from_array(zm));
        let (fp, fm) = (field(gp), field(gm));
        lhs_div += (fp.to_array()[i] - fm.to_array()[i]) / (2.0 * h);
        let a = match i {
            0 => &mut grad_f.x,
            1 => &mut grad_f.y,
            _ => &mut grad_f.z,
        };
        *a = (f_of(gp) - f_of(gm)) / (2.0 * h);
    }
    let aig = body.a_tilde_solve(contact_radius, gamma);
    let ail = body.a_tilde_solve(contact_radius, momentum);
    let pairing = gamma.cross(aig).dot(ail);
    let rhs_div = pairing / f_of(gamma);
    let lhs_grad = grad_f.dot(field(gamma));
    let rhs_grad = 2.0 * pairing;
    (lhs_div, rhs_div, lhs_grad, rhs_grad)
}

// ---------------------------------------------------------------------------
// skiding
// ---------------------------------------------------------------------------

/// Skiding phase point: contact point and velocity on the base sphere plus
/// attitude and spin momentum `M = A Omega` of the free rotation.
#[derive(Debug, Clone, Copy)]
pub struct SkidingState {
    pub contact: Vec3,
    pub contact_velocity: Vec3,
    pub attitude: Rot3,
    pub spin: Vec3,
}

impl SkidingState {
    pub fn to_array(&self) -> [f64; 18] {
        let m = self.attitude.matrix().0;
        [
            self.contact.x, self.contact.y, self.contact.z,
            self.contact_velocity.x, self.contact_velocity.y, self.contact_velocity.z,
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            self.spin.x, self.spin.y, self.spin.z,
        ]
    }

    pub fn from_array(a: &[f64; 18]) -> SkidingState {
        let m = Mat3([[a[6], a[7], a[8]], [a[9], a[10], a[11]], [a[12], a[13], a[14]]]);
        SkidingState {
            contact: Vec3::new(a[0], a[1], a[2]),
            contact_velocity: Vec3::new(a[3], a[4], a[5]),
            attitude: Rot3::try_new(m)
                .unwrap_or_else(|_| project_rotation(m).expect("attitude not projectable")),
            spin: Vec3::new(a[15], a[16], a[17]),
        }
    }
}

/// Skiding equations: the contact point follows the great-circle geodesic
/// flow on the base sphere while the body spins as a free Euler top
/// (`M' = M x Omega`, `Omega = A^-1 M`); the two motions uncouple.
pub fn skiding_rate(state: &SkidingState, body: &BodyParams, scene: &SceneParams) -> [f64; 18] {
    let a = scene.base_radius().expect("skiding needs a spherical base");
    let acc = state.contact * (-state.contact_velocity.norm_squared() / (a * a));
    let omega = Vec3::new(
        state.spin.x / body.inertia[0],
        state.spin.y / body.inertia[1],
        state.spin.z / body.inertia[2],
    );
    let spin_rate = state.spin.cross(omega);
    let att_rate = state.attitude.matrix() * hat(omega);
    let m = att_rate.0;
    [
        state.contact_velocity.x, state.contact_velocity.y, state.contact_velocity.z,
        acc.x, acc.y, acc.z,
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        spin_rate.x, spin_rate.y, spin_rate.z,
    ]
}

/// Skiding energy `T = mu (1 + b/a)^2 |q'|^2 / 2 + (A^-1 M, M)/2`.
pub fn skiding_energy(state: &SkidingState, body: &BodyParams, scene: &SceneParams) -> f64 {
    let omega = Vec3::new(
        state.spin.x / body.inertia[0],
        state.spin.y / body.inertia[1],
        state.spin.z / body.inertia[2],
    );
    0.5 * body.mass * scene.one_plus_ratio().powi(2) * state.contact_velocity.norm_squared()
        + 0.5 * state.spin.dot(omega)
}

// ---------------------------------------------------------------------------
// trajectory drivers
// ---------------------------------------------------------------------------

/// Which constrained family to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RollingModel {
    Rubber,
    Marble { contact_radius: f64 },
}

/// A sampled full-state trajectory with per-sample energy and no-twist
/// residual.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub energies: Vec<f64>,
    pub constraint_residuals: Vec<f64>,
}

impl Trajectory {
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.energies[0];
        let scale = h0.abs().max(1e-30);
        self.energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / scale
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.constraint_residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

fn state_projector(y: &mut [f64; 15]) {
    let m = Mat3([[y[0], y[1], y[2]], [y[3], y[4], y[5]], [y[6], y[7], y[8]]]);
    if let Ok(r) = project_rotation(m) {
        let m = r.matrix().0;
        y[0..3].copy_from_slice(&m[0]);
        y[3..6].copy_from_slice(&m[1]);
        y[6..9].copy_from_slice(&m[2]);
    }
    let g = Vec3::new(y[9], y[10], y[11]);
    if let Some(n) = g.normalized() {
        y[9] = n.x;
        y[10] = n.y;
        y[11] = n.z;
    }
}

/// Integrates the rubber or marble system, sampling every `sample_every`-th
/// accepted step (0 keeps only endpoints).
pub fn simulate(
    model: RollingModel,
    state0: &FullState,
    body: &BodyParams,
    scene: &SceneParams,
    t_end: f64,
    stepper: &StepperSpec,
    sample_every: usize,
) -> Result<Trajectory, DynamicsError> {
    state0.check_gamma_unit()?;
    let body = *body;
    let scene = *scene;
    let rhs = move |_t: f64, y: &[f64; 15]| -> [f64; 15] {
        let state = FullState::from_array(y);
        let rate = match model {
            RollingModel::Rubber => {
                let omega = body.a_tilde_solve(body.radius, state.momentum);
                rubber_rate_unchecked(&state, &body, &scene, omega)
            }
            RollingModel::Marble { contact_radius } => {
                let omega =
                    omega_from_momentum_marble(state.momentum, state.gamma, &body, contact_radius)
                        .expect("marble inversion degenerate during integration");
                FullStateRate {
                    attitude_rate: state.attitude.matrix() * hat(omega),
                    gamma_rate: state.gamma.cross(omega) * scene.kappa(),
                    momentum_rate: state.momentum.cross(omega),
                }
            }
        };
        let m = rate.attitude_rate.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            rate.gamma_rate.x, rate.gamma_rate.y, rate.gamma_rate.z,
            rate.momentum_rate.x, rate.momentum_rate.y, rate.momentum_rate.z,
        ]
    };
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        constraint_residuals: Vec::new(),
    };
    let mut count = 0usize;
    let record = |traj: &mut Trajectory, t: f64, y: &[f64; 15]| {
        let state = FullState::from_array(y);
        let (energy, residual) = match model {
            RollingModel::Rubber => (
                rubber_energy(&state, &body),
                rubber_constraint_residual(state.momentum, state.gamma, &body),
            ),
            RollingModel::Marble { contact_radius } => {
                let omega =
                    omega_from_momentum_marble(state.momentum, state.gamma, &body, contact_radius)
                        .expect("marble inversion degenerate");
                (0.5 * state.momentum.dot(omega), 0.0)
            }
        };
        traj.times.push(t);
        traj.states.push(state);
        traj.energies.push(energy);
        traj.constraint_residuals.push(residual);
    };
    let y_end = integrate(
        rhs,
        state0.to_array(),
        (0.0, t_end),
        stepper,
        Some(&state_projector),
        |t, y| {
            let keep = sample_every != 0 && count % sample_every == 0;
            if keep || count == 0 {
                record(&mut traj, t, y);
            }
            count += 1;
        },
    )?;
    if *traj.times.last().unwrap() < t_end {
        record(&mut traj, t_end, &y_end);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn body() -> BodyParams {
        BodyParams::new(1.0, [1.0, 2.0, 3.0], 0.5).unwrap()
    }

    fn scene(b: f64, a: f64) -> SceneParams {
        let body = BodyParams::new(1.0, [1.0, 2.0, 3.0], b).unwrap();
        SceneParams::new(BaseSurface::Sphere { radius: a }, &body).unwrap()
    }

    fn generic_rubber_state(body: &BodyParams) -> FullState {
        let gamma = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let momentum = project_momentum_to_constraint(Vec3::new(0.3, -0.2, 0.5), gamma, body);
        FullState { attitude: Rot3::IDENTITY, gamma, momentum }
    }

    #[test]
    fn kappa_values() {
        assert_abs_diff_eq!(scene(1.0, 1.0).kappa(), 0.5);
        assert_abs_diff_eq!(scene(-2.0, 1.0).kappa(), -1.0);
        let body = body();
        let plane = SceneParams::new(BaseSurface::Plane, &body).unwrap();
        assert_eq!(plane.kappa(), 1.0);
        assert_eq!(plane.ratio(), 0.0);
        assert_eq!(plane.exponent(), -0.5);
        let degenerate = BodyParams::new(1.0, [1.0, 2.0, 3.0], -1.0).unwrap();
        assert!(matches!(
            SceneParams::new(BaseSurface::Sphere { radius: 1.0 }, &degenerate),
            Err(ParamError::KappaUndefined)
        ));
    }

    #[test]
    fn param_validation() {
        assert!(BodyParams::new(0.0, [1.0, 2.0, 3.0], 1.0).is_err());
        assert!(BodyParams::new(1.0, [2.0, 1.0, 3.0], 1.0).is_err());
        assert!(BodyParams::new(1.0, [1.0, 2.0, 3.0], 0.0).is_err());
        // equal inertias are fine here (only the sphero-conical chart needs gaps)
        assert!(BodyParams::new(1.0, [2.0, 2.0, 2.0], 1.0).is_ok());
    }

    #[test]
    fn rubber_omega_examples() {
        // A = diag(1,2,3), mu b^2 = 1 -> A~ = diag(2,3,4)
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let gamma = Vec3::new(0.0, 0.0, 1.0);
        let omega = omega_from_momentum_rubber(Vec3::new(2.0, 0.0, 0.0), gamma, &b).unwrap();
        assert_eq!(omega, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(omega_from_momentum_rubber(Vec3::ZERO, gamma, &b).unwrap(), Vec3::ZERO);
        // off-constraint state rejected
        assert!(omega_from_momentum_rubber(Vec3::new(0.0, 0.0, 1.0), gamma, &b).is_err());
        // round trip A~ Omega = L
        let l = project_momentum_to_constraint(Vec3::new(0.7, -0.4, 0.9), gamma, &b);
        let om = omega_from_momentum_rubber(l, gamma, &b).unwrap();
        assert!((b.a_tilde() * om - l).norm() < 1e-12);
    }

    #[test]
    fn marble_omega_inverts_forward_map() {
        let b = body();
        let r = 0.8;
        let gamma = Vec3::new(0.3, -0.5, 0.9).normalized().unwrap();
        let omega = Vec3::new(0.4, 1.1, -0.7);
        let l = momentum_from_omega_marble(omega, gamma, &b, r);
        let back = omega_from_momentum_marble(l, gamma, &b, r).unwrap();
        assert!((back - omega).norm() < 1e-12);
        assert_eq!(omega_from_momentum_marble(Vec3::ZERO, gamma, &b, r).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn marble_omega_round_trip_via_linear_solve() {
        // independent route: solve L = A Omega + mu Q x (Omega x Q) as a 3x3 system
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let r = 1.0;
        let gamma = Vec3::new(0.0, 0.0, 1.0);
        let l = Vec3::new(0.0, 0.0, 4.0);
        // build the linear map M(omega) columnwise and invert
        let col = |e: Vec3| momentum_from_omega_marble(e, gamma, &b, r);
        let m = Mat3::from_cols(
            col(Vec3::new(1.0, 0.0, 0.0)),
            col(Vec3::new(0.0, 1.0, 0.0)),
            col(Vec3::new(0.0, 0.0, 1.0)),
        );
        let oracle = m.inverse().unwrap() * l;
        let omega = omega_from_momentum_marble(l, gamma, &b, r).unwrap();
        assert!((omega - oracle).norm() < 1e-12);
    }

    #[test]
    fn multiplier_vanishes_in_stated_cases() {
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let gamma = Vec3::new(0.0, 0.0, 1.0);
        // A~^-1 L x L = 0 for L along a principal axis
        assert_abs_diff_eq!(rubber_multiplier(Vec3::new(2.0, 0.0, 0.0), gamma, &b, 0.5), 0.0);
        // L parallel to gamma
        let g = Vec3::new(0.2, 0.5, 0.9).normalized().unwrap();
        assert_abs_diff_eq!(rubber_multiplier(g * 1.7, g, &b, 2.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn multiplier_preserves_constraint_under_fd() {
        let b = body();
        let sc = scene(0.5, 1.0);
        let st = generic_rubber_state(&b);
        // finite-difference d/dt (Omega, gamma) along the flow
        let rate = rubber_rate(&st, &b, &sc).unwrap();
        let h = 1e-7;
        let st_p = FullState {
            attitude: st.attitude,
            gamma: (st.gamma + rate.gamma_rate * h).normalized().unwrap(),
            momentum: st.momentum + rate.momentum_rate * h,
        };
        let st_m = FullState {
            attitude: st.attitude,
            gamma: (st.gamma - rate.gamma_rate * h).normalized().unwrap(),
            momentum: st.momentum - rate.momentum_rate * h,
        };
        let c = |s: &FullState| rubber_constraint_residual(s.momentum, s.gamma, &b);
        let dc = (c(&st_p) - c(&st_m)) / (2.0 * h);
        assert!(dc.abs() < 1e-9, "constraint derivative {dc}");
    }

    #[test]
    fn rubber_rate_frozen_example() {
        // A~ = diag(2,3,4), kappa = 1/2, gamma = e3, L = 2 e1
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let sc = scene(1.0, 1.0);
        let st = FullState {
            attitude: Rot3::IDENTITY,
            gamma: Vec3::new(0.0, 0.0, 1.0),
            momentum: Vec3::new(2.0, 0.0, 0.0),
        };
        let rate = rubber_rate(&st, &b, &sc).unwrap();
        assert!((rate.gamma_rate - Vec3::new(0.0, 0.5, 0.0)).norm() < 1e-15);
        assert!(rate.momentum_rate.norm() < 1e-15);
        // zero momentum is an equilibrium
        let st0 = FullState { momentum: Vec3::ZERO, ..st };
        let rate0 = rubber_rate(&st0, &b, &sc).unwrap();
        assert_eq!(rate0.gamma_rate, Vec3::ZERO);
        assert_eq!(rate0.momentum_rate, Vec3::ZERO);
    }

    #[test]
    fn spherical_top_precesses_on_circle() {
        // equal inertias: Omega constant in the body frame, gamma precesses
        let b = BodyParams::new(2.0, [1.5, 1.5, 1.5], 0.5).unwrap();
        let sc = SceneParams::new(BaseSurface::Sphere { radius: 1.0 }, &b).unwrap();
        let gamma = Vec3::new(1.0, 0.0, 1.0).normalized().unwrap();
        let momentum = project_momentum_to_constraint(Vec3::new(0.0, 1.0, 0.0), gamma, &b);
        let st = FullState { attitude: Rot3::IDENTITY, gamma, momentum };
        let omega0 = omega_from_momentum_rubber(momentum, gamma, &b).unwrap();
        let t_end = 3.0;
        let traj = simulate(RollingModel::Rubber, &st, &b, &sc, t_end, &StepperSpec::fixed(1e-3), 0)
            .unwrap();
        let last = traj.states.last().unwrap();
        let omega1 = omega_from_momentum_rubber(last.momentum, last.gamma, &b).unwrap();
        assert!((omega1 - omega0).norm() < 1e-9);
        // gamma(t) = exp(-kappa t [Omega]) gamma(0)
        let expected = Rot3::exp(omega0 * (-sc.kappa() * t_end)).apply(gamma);
        assert!((last.gamma - expected).norm() < 1e-9);
    }

    #[test]
    fn rubber_conservation_short_run() {
        let b = body();
        let sc = scene(0.5, 1.0);
        let st = generic_rubber_state(&b);
        let traj =
            simulate(RollingModel::Rubber, &st, &b, &sc, 10.0, &StepperSpec::fixed(1e-3), 1).unwrap();
        assert!(traj.energy_drift() < 1e-10, "drift {}", traj.energy_drift());
        assert!(traj.max_constraint_residual() < 1e-10);
        let last = traj.states.last().unwrap();
        assert!((last.gamma.norm() - 1.0).abs() < 1e-12);
        assert!(last.attitude.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn time_reversal_returns_initial_state() {
        let b = body();
        let sc = scene(0.5, 1.0);
        let st = generic_rubber_state(&b);
        let fwd =
            simulate(RollingModel::Rubber, &st, &b, &sc, 5.0, &StepperSpec::fixed(1e-3), 0).unwrap();
        // reverse by flipping momentum (the equations are time-reversible
        // under L -> -L, R -> R, gamma -> gamma)
        let end = fwd.states.last().unwrap();
        let back_start = FullState {
            attitude: end.attitude,
            gamma: end.gamma,
            momentum: -end.momentum,
        };
        let back = simulate(RollingModel::Rubber, &back_start, &b, &sc, 5.0, &StepperSpec::fixed(1e-3), 0)
            .unwrap();
        let final_state = back.states.last().unwrap();
        assert!((final_state.gamma - st.gamma).norm() < 1e-8);
        assert!((final_state.momentum + st.momentum).norm() < 1e-8);
        assert!(final_state.attitude.matrix().max_abs_diff(st.attitude.matrix()) < 1e-7);
    }

    #[test]
    fn marble_f4_conserved_only_for_kappa_one() {
        let b = body();
        let r = b.radius;
        let gamma = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let st = FullState {
            attitude: Rot3::IDENTITY,
            gamma,
            momentum: Vec3::new(0.3, -0.2, 0.5),
        };
        let f0 = marble_integrals(&st, &b, r).unwrap();
        // kappa = 1: plane scene
        let plane = SceneParams::new(BaseSurface::Plane, &b).unwrap();
        let t1 = simulate(RollingModel::Marble { contact_radius: r }, &st, &b, &plane, 100.0,
                          &StepperSpec::fixed(1e-3), 50).unwrap();
        let drift4: f64 = t1.states.iter()
            .map(|s| (marble_integrals(s, &b, r).unwrap()[3] - f0[3]).abs())
            .fold(0.0, f64::max);
        assert!(drift4 < 1e-9, "f4 drift at kappa=1: {drift4}");
        // kappa = 1/2: a = b
        let sc = scene(0.5, 0.5);
        assert_abs_diff_eq!(sc.kappa(), 0.5);
        let t2 = simulate(RollingModel::Marble { contact_radius: r }, &st, &b, &sc, 100.0,
                          &StepperSpec::fixed(1e-3), 50).unwrap();
        let drift4: f64 = t2.states.iter()
            .map(|s| (marble_integrals(s, &b, r).unwrap()[3] - f0[3]).abs())
            .fold(0.0, f64::max);
        assert!(drift4 > 1e-3, "f4 should drift at kappa=1/2, got {drift4}");
        // f1, f2, f3 stay flat there
        for k in 0..3 {
            let d: f64 = t2.states.iter()
                .map(|s| (marble_integrals(s, &b, r).unwrap()[k] - f0[k]).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-9, "f{} drift {d}", k + 1);
        }
    }

    #[test]
    fn marble_steady_rotation_about_principal_axis() {
        // gamma and L along the same principal axis: Omega parallel to L,
        // so both L and gamma are stationary
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let sc = scene(1.0, 1.0);
        let st = FullState {
            attitude: Rot3::IDENTITY,
            gamma: Vec3::new(0.0, 0.0, 1.0),
            momentum: Vec3::new(0.0, 0.0, 4.0),
        };
        let rate = marble_rate(&st, &b, &sc, 1.0).unwrap();
        assert_eq!(rate.momentum_rate, Vec3::ZERO);
        assert_eq!(rate.gamma_rate, Vec3::ZERO);
    }

    #[test]
    fn marble_error_paths_off_the_sphere() {
        // on the unit sphere the inversion denominator and the measure
        // function are strictly positive; both error paths need unphysical
        // ambient inputs
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 0.5).unwrap();
        let r = 0.5;
        let mu_r2 = b.mass * r * r;
        // pick |gamma| so that mu r^2 (gamma, A~^-1 gamma) = 1 exactly
        let scale = ((b.inertia[0] + mu_r2) / mu_r2).sqrt();
        let gamma = Vec3::new(scale, 0.0, 0.0);
        assert!(matches!(
            omega_from_momentum_marble(Vec3::new(1.0, 0.0, 0.0), gamma, &b, r),
            Err(DynamicsError::DegenerateInversion { .. })
        ));
        let too_far = Vec3::new(2.0 * scale, 0.0, 0.0);
        assert!(matches!(
            marble_measure_density(too_far, &b, r),
            Err(DynamicsError::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn marble_integrals_simple_values() {
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let st = FullState {
            attitude: Rot3::IDENTITY,
            gamma: Vec3::new(0.0, 0.0, 1.0),
            momentum: Vec3::new(0.0, 0.0, 4.0),
        };
        let f = marble_integrals(&st, &b, 1.0).unwrap();
        assert_eq!(f[1], 16.0);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[3], 4.0);
        let rest = FullState { momentum: Vec3::ZERO, ..st };
        assert_eq!(marble_integrals(&rest, &b, 1.0).unwrap(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn measure_density_examples() {
        let b = BodyParams::new(1.0, [1.0, 2.0, 3.0], 1.0).unwrap();
        let (f, dens) = marble_measure_density(Vec3::new(0.0, 0.0, 1.0), &b, 1.0).unwrap();
        assert_abs_diff_eq!(f, 1.0 - 1.0 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dens, f.powf(-0.5), epsilon = 1e-15);
        // isotropic case independent of gamma
        let iso = BodyParams::new(1.0, [2.0, 2.0, 2.0], 1.0).unwrap();
        let g1 = Vec3::new(0.0, 0.0, 1.0);
        let g2 = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let (f1, _) = marble_measure_density(g1, &iso, 1.0).unwrap();
        let (f2, _) = marble_measure_density(g2, &iso, 1.0).unwrap();
        assert_abs_diff_eq!(f1, 1.0 - 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-15);
    }

    #[test]
    fn measure_divergence_vanishes() {
        let b = body();
        let r = 0.5;
        let mut worst: f64 = 0.0;
        let mut rng = crate::sample::rng_for(7, 0);
        for _ in 0..100 {
            let gamma = crate::sample::unit_vector(&mut rng);
            let momentum = crate::sample::vector_in_ball(&mut rng, 1.5);
            for kappa in [-1.0, 0.5, 1.0, 2.0] {
                worst = worst.max(marble_measure_divergence(gamma, momentum, &b, r, kappa).abs());
            }
        }
        assert!(worst < 1e-6, "divergence {worst}");
    }

    #[test]
    fn divergence_identities_hold() {
        let b = body();
        let r = 0.5;
        let mut rng = crate::sample::rng_for(11, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let gamma = crate::sample::unit_vector(&mut rng);
            let momentum = crate::sample::vector_in_ball(&mut rng, 1.5);
            let (ld, rd, lg, rg) = divergence_identities(gamma, momentum, &b, r);
            worst = worst.max((ld - rd).abs()).max((lg - rg).abs());
        }
        assert!(worst < 1e-6, "identity residual {worst}");
        // isotropic body: both right sides vanish; rest state: everything vanishes
        let iso = BodyParams::new(1.0, [2.0, 2.0, 2.0], 0.5).unwrap();
        let g = Vec3::new(0.3, -0.4, 0.866).normalized().unwrap();
        let (_, rd, _, rg) = divergence_identities(g, Vec3::new(0.5, 0.2, -0.1), &iso, 0.5);
        assert_abs_diff_eq!(rd, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rg, 0.0, epsilon = 1e-15);
        let (ld, rd, lg, rg) = divergence_identities(g, Vec3::ZERO, &b, 0.5);
        for v in [ld, rd, lg, rg] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn skiding_uncouples_and_conserves() {
        let b = body();
        let sc = scene(0.5, 2.0);
        let a = 2.0;
        let q0 = Vec3::new(a, 0.0, 0.0);
        let v = 0.7;
        let st = SkidingState {
            contact: q0,
            contact_velocity: Vec3::new(0.0, v, 0.0),
            attitude: Rot3::IDENTITY,
            spin: Vec3::new(0.4, 0.9, -0.2),
        };
        let e0 = skiding_energy(&st, &b, &sc);
        let m2_0 = st.spin.norm_squared();
        let period = 2.0 * std::f64::consts::PI * a / v;
        let spec = StepperSpec::fixed(1e-3);
        let rhs = |_t: f64, y: &[f64; 18]| skiding_rate(&SkidingState::from_array(y), &b, &sc);
        let yf = integrate(rhs, st.to_array(), (0.0, period), &spec, None, |_, _| {}).unwrap();
        let sf = SkidingState::from_array(&yf);
        // geodesic closes after one great-circle period
        assert!((sf.contact - q0).norm() < 1e-6, "gap {}", (sf.contact - q0).norm());
        // Euler-top invariants
        assert!((skiding_energy(&sf, &b, &sc) - e0).abs() < 1e-9);
        assert!((sf.spin.norm_squared() - m2_0).abs() < 1e-9);
        // zero contact velocity stays put
        let rest = SkidingState { contact_velocity: Vec3::ZERO, ..st };
        let rate = skiding_rate(&rest, &b, &sc);
        assert_eq!(&rate[0..6], &[0.0; 6]);
    }
}
