//! Reduction of rubber rolling to the sphere: the connection, its curvature
//! and holonomy, the momentum pairing, the compressed Lagrangian, the
//! reduced Legendre transform, and the conformal-closedness verification of
//! the reduced 2-form.
//!
//! All connection formulas are evaluated at the global section `(gamma, I)`;
//! equivariance (checked numerically) transports them everywhere else.

use crate::body::{BodyParams, SceneParams};
use crate::dual::{DVec3, Dual};
use crate::error::DynamicsError;
use crate::sample;
use crate::so3::{hat, vee, Mat3, Rot3, Vec3};
use crate::tol;

// ---------------------------------------------------------------------------
// connection, lift, curvature
// ---------------------------------------------------------------------------

/// Space angular velocity enforced by no slip and no twist for contact
/// velocity `q_dot` at `q` on the base sphere:
/// `omega = (1/a^2)(1 + a/b) q x q_dot`.
pub fn connection_omega(q: Vec3, q_dot: Vec3, scene: &SceneParams) -> Vec3 {
    let a = scene.base_radius().expect("connection needs a spherical base");
    let factor = (1.0 + 1.0 / scene.ratio()) / (a * a);
    q.cross(q_dot) * factor
}

/// Horizontal lift of `gamma_dot` at the fiber point over `gamma` with
/// attitude `R`: contact velocity `-b R gamma_dot` on the base sphere and
/// body angular velocity `(1 + b/a) gamma_dot x gamma`.
pub fn horizontal_lift(
    gamma: Vec3,
    gamma_dot: Vec3,
    attitude: Rot3,
    scene: &SceneParams,
) -> (Vec3, Vec3) {
    let a = scene.base_radius().expect("horizontal lift needs a spherical base");
    let b = scene.ratio() * a;
    let q_dot = attitude.apply(gamma_dot) * (-b);
    let omega_body = gamma_dot.cross(gamma) * scene.one_plus_ratio();
    q_dot
        .is_finite()
        .then_some(())
        .expect("non-finite lift");
    (q_dot, omega_body)
}

/// Connection 1-form at the global section point `(gamma, I)` on the unit
/// sphere times the group:
/// `phi(gamma_dot, sigma) = (1+b/a) gamma x gamma_dot - (b/a)[sigma - (1 + a/b)(sigma . gamma) gamma]`.
pub fn connection_form(gamma: Vec3, gamma_dot: Vec3, sigma: Vec3, scene: &SceneParams) -> Vec3 {
    let r = scene.ratio();
    gamma.cross(gamma_dot) * (1.0 + r) - (sigma - gamma * ((1.0 + 1.0 / r) * sigma.dot(gamma))) * r
}

/// Vertical tangent vector generated by `rho` at the section point:
/// `V(rho) = (rho x gamma, rho)` in unit-sphere coordinates.
pub fn vertical_generator(gamma: Vec3, rho: Vec3) -> (Vec3, Vec3) {
    (rho.cross(gamma), rho)
}

/// Unique vertical + horizontal decomposition of a tangent vector
/// `(gamma_dot, sigma)` at the section point. Returns `(rho, v)` with
/// vertical part `V(rho)` and horizontal part `Hor(v)` in unit-sphere
/// coordinates `Hor(v) = (-(b/a) v, (1+b/a) v x gamma)`.
pub fn split_tangent(
    gamma: Vec3,
    gamma_dot: Vec3,
    sigma: Vec3,
    scene: &SceneParams,
) -> (Vec3, Vec3) {
    let rho = connection_form(gamma, gamma_dot, sigma, scene);
    let horizontal_first = gamma_dot - rho.cross(gamma);
    let v = horizontal_first * (-1.0 / scene.ratio());
    (rho, v)
}

/// Curvature of the rubber connection as a 2-form on the unit sphere:
/// coefficient `(1 - b^2/a^2)` times `gamma . d(area)`.
pub fn curvature_coefficient(scene: &SceneParams) -> f64 {
    1.0 - scene.ratio() * scene.ratio()
}

/// Curvature 2-form value at `gamma`: `(coefficient, axis)`.
pub fn curvature_2form(gamma: Vec3, scene: &SceneParams) -> (f64, Vec3) {
    (curvature_coefficient(scene), gamma)
}

/// Closed-form holonomy of rolling once around a circle of angular radius
/// `theta` on the base sphere, and the net frame rotation angle
/// `2 pi - 2 pi |holonomy|`.
#[derive(Debug, Clone, Copy)]
pub struct Holonomy {
    pub holonomy: f64,
    pub frame_rotation: f64,
}

pub fn holonomy_circle(theta: f64, base_radius: f64, rolling_radius: f64) -> Holonomy {
    let ratio2 = (base_radius / rolling_radius).powi(2);
    let holonomy = -theta.cos() * (1.0 + ratio2 * theta.tan().powi(2)).sqrt();
    Holonomy {
        holonomy,
        frame_rotation: 2.0 * std::f64::consts::PI * (1.0 - holonomy.abs()),
    }
}

/// Net rotation of the rolling body after one numerical trip around the
/// circle of angular radius `theta`, integrating the connection by exact
/// substep exponentials at midpoints.
pub fn holonomy_loop_rotation(
    theta: f64,
    base_radius: f64,
    rolling_radius: f64,
    steps: usize,
) -> Rot3 {
    let a = base_radius;
    let dt = 2.0 * std::f64::consts::PI / steps as f64;
    let mut rot = Rot3::IDENTITY;
    for i in 0..steps {
        let t = (i as f64 + 0.5) * dt;
        let q = Vec3::new(theta.sin() * t.cos(), theta.sin() * t.sin(), theta.cos()) * a;
        let q_dot = Vec3::new(-theta.sin() * t.sin(), theta.sin() * t.cos(), 0.0) * a;
        let omega = q.cross(q_dot) * ((1.0 + a / rolling_radius) / (a * a));
        rot = Rot3::exp(omega * dt) * rot;
    }
    rot
}

/// Limit density `(2 pi - 2 pi |holonomy|) / cap area` of the closed form at
/// polar angle `theta`; tends to `1/a^2 - 1/b^2`.
pub fn holonomy_density(theta: f64, base_radius: f64, rolling_radius: f64) -> f64 {
    let h = holonomy_circle(theta, base_radius, rolling_radius);
    let cap = 2.0 * std::f64::consts::PI * base_radius * base_radius * (1.0 - theta.cos());
    h.frame_rotation / cap
}

// ---------------------------------------------------------------------------
// momentum pairing and the reduced Legendre data
// ---------------------------------------------------------------------------

/// Momentum map of the diagonal rotation action on the sphere-times-group
/// phase space: `J(m, q, r) = m + q x r` with `r` a cotangent representative
/// perpendicular to `q`.
pub fn momentum_map(m: Vec3, q: Vec3, r: Vec3) -> Vec3 {
    m + q.cross(r)
}

/// Full kinetic energy `T = mu (1+b/a)^2 |q_dot|^2 / 2 + (A Omega, Omega)/2`
/// at a contact velocity and body angular velocity.
pub fn full_kinetic_energy(
    q_dot: Vec3,
    omega_body: Vec3,
    body: &BodyParams,
    scene: &SceneParams,
) -> f64 {
    0.5 * body.mass * scene.one_plus_ratio().powi(2) * q_dot.norm_squared()
        + 0.5 * omega_body.dot(body.inertia_matrix() * omega_body)
}

/// Scalar coefficient of the gyroscopic 2-form against the area form:
/// `(1 - b/a)(1 + b/a)^2 (gamma, A (gamma_dot x gamma))`.
pub fn jk_coefficient(gamma: Vec3, gamma_dot: Vec3, scene: &SceneParams, body: &BodyParams) -> f64 {
    let r = scene.ratio();
    (1.0 - r) * (1.0 + r).powi(2) * gamma.dot(body.inertia_matrix() * gamma_dot.cross(gamma))
}

/// Compressed kinetic energy on the sphere:
/// `T_red = (1+b/a)^2 [ mu b^2 |gamma_dot|^2 + (A (gamma x gamma_dot), gamma x gamma_dot) ] / 2`.
pub fn reduced_kinetic_energy(
    gamma: Vec3,
    gamma_dot: Vec3,
    scene: &SceneParams,
    body: &BodyParams,
) -> f64 {
    let cross = gamma.cross(gamma_dot);
    let b2 = body.radius * body.radius;
    0.5 * scene.one_plus_ratio().powi(2)
        * (body.mass * b2 * gamma_dot.norm_squared() + cross.dot(body.inertia_matrix() * cross))
}

/// Reduced Legendre transform
/// `p = (1+b/a)^2 [ mu b^2 gamma_dot + A(gamma x gamma_dot) x gamma ]`.
pub fn reduced_legendre(
    gamma: Vec3,
    gamma_dot: Vec3,
    scene: &SceneParams,
    body: &BodyParams,
) -> Vec3 {
    let b2 = body.radius * body.radius;
    (gamma_dot * (body.mass * b2)
        + (body.inertia_matrix() * gamma.cross(gamma_dot)).cross(gamma))
        * scene.one_plus_ratio().powi(2)
}

/// Determinant function of the reduced Legendre transform,
/// `F = I1 I2 I3 (1+b/a)^2 [ (A^-1 g, g) + mu b^2 S(g) + mu^2 b^4/(I1 I2 I3) ]`
/// with `S(g)` the cyclic sum of `(g_j^2 + g_k^2)/(I_j I_k)`.
///
/// Note: the honest 2x2 determinant of the Legendre matrix restricted to an
/// orthonormal tangent basis carries one extra `(1+b/a)^2`; this function
/// uses the normalization in which `F = (1+b/a)^2 (l1 + mu b^2)(l2 + mu b^2)`
/// in sphero-conical coordinates.
pub fn legendre_determinant(gamma: Vec3, scene: &SceneParams, body: &BodyParams) -> f64 {
    let [i1, i2, i3] = body.inertia;
    let c = body.mass * body.radius * body.radius;
    let g2 = [gamma.x * gamma.x, gamma.y * gamma.y, gamma.z * gamma.z];
    let a_inv = g2[0] / i1 + g2[1] / i2 + g2[2] / i3;
    let cyc = (g2[1] + g2[2]) / (i2 * i3) + (g2[0] + g2[2]) / (i1 * i3) + (g2[0] + g2[1]) / (i1 * i2);
    (i1 * i2 * i3) * scene.one_plus_ratio().powi(2) * (a_inv + c * cyc + c * c / (i1 * i2 * i3))
}

/// Conformal factor `f = F^((b-a)/(2a))`; identically 1 when `a = b`.
pub fn conformal_factor(gamma: Vec3, scene: &SceneParams, body: &BodyParams) -> f64 {
    legendre_determinant(gamma, scene, body).powf(scene.exponent())
}

/// Contact point on the base sphere, `q = a R gamma`.
pub fn reconstruct_contact_point(attitude: Rot3, gamma: Vec3, base_radius: f64) -> Vec3 {
    attitude.apply(gamma) * base_radius
}

// ---------------------------------------------------------------------------
// right-invariance of the constraint forms
// ---------------------------------------------------------------------------

/// Numerical right-invariance of the four constraint 1-forms on the
/// extended space: the kernel at `(I, q)` right-translated by `S` stays in
/// the kernel at `(S, q)`. Returns the worst form value over a kernel basis.
pub fn constraint_forms_equivariance_residual(
    q: Vec3,
    rolling_radius: f64,
    rotation: Rot3,
) -> f64 {
    let eta = |r: Rot3, r_dot: Mat3, q: Vec3, q_dot: Vec3| -> (Vec3, f64) {
        let rho = vee(r_dot * r.matrix().transpose());
        let n2 = q.norm_squared();
        let eta123 = rho - q.cross(q_dot) * ((1.0 + q.norm() / rolling_radius) / n2);
        (eta123, q.dot(q_dot))
    };
    let mut worst: f64 = 0.0;
    // kernel basis at (I, q): two tangent directions at q
    let n = q.normalized().unwrap();
    let t1 = sample::tangent_at(n, &mut sample::rng_for(3, 0));
    let t2 = n.cross(t1);
    for q_dot in [t1, t2] {
        let rho = q.cross(q_dot) * ((1.0 + q.norm() / rolling_radius) / q.norm_squared());
        // at the identity the kernel vector is (hat(rho), q_dot)
        let (e, e4) = eta(Rot3::IDENTITY, hat(rho), q, q_dot);
        worst = worst.max(e.norm()).max(e4.abs());
        // right-translate to (S, q): R_dot = hat(rho) S
        let (e, e4) = eta(rotation, hat(rho) * rotation.matrix(), q, q_dot);
        worst = worst.max(e.norm()).max(e4.abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// conformal closedness of the reduced 2-form
// ---------------------------------------------------------------------------

/// Dual-valued chart data at `x = (theta, phi, theta_dot, phi_dot)` seeded
/// along direction `dir`: the two momentum components of the pulled-back
/// canonical 1-form, the gyroscopic coefficient and `F`.
fn chart_data(
    x: [f64; 4],
    dir: usize,
    scene: &SceneParams,
    body: &BodyParams,
) -> (Dual, Dual, Dual, Dual) {
    let seed = |i: usize| {
        if i == dir { Dual::variable(x[i]) } else { Dual::constant(x[i]) }
    };
    let (th, ph, thd, phd) = (seed(0), seed(1), seed(2), seed(3));
    let (sth, cth) = (th.sin(), th.cos());
    let (sph, cph) = (ph.sin(), ph.cos());
    let g = DVec3([sth * cph, sth * sph, cth]);
    let d_th = DVec3([cth * cph, cth * sph, -sth]);
    let d_ph = DVec3([-(sth * sph), sth * cph, Dual::constant(0.0)]);
    let g_dot = d_th.scale(thd).plus(d_ph.scale(phd));
    let k2 = scene.one_plus_ratio().powi(2);
    let b2 = body.mass * body.radius * body.radius;
    // p_gamma = (1+r)^2 [ mu b^2 g_dot + (A (g x g_dot)) x g ]
    let a_cross = g.cross(g_dot).diag_mul(body.inertia);
    let p_gamma = g_dot
        .scale(Dual::constant(b2))
        .plus(a_cross.cross(g))
        .scale(Dual::constant(k2));
    let p_th = p_gamma.dot(d_th);
    let p_ph = p_gamma.dot(d_ph);
    // gyroscopic coefficient (1-r)(1+r)^2 (g, A (g_dot x g))
    let r = scene.ratio();
    let jk = g
        .dot(g_dot.cross(g).diag_mul(body.inertia))
        * ((1.0 - r) * k2);
    // F via the closed form
    let [i1, i2, i3] = body.inertia;
    let g2 = [g.0[0] * g.0[0], g.0[1] * g.0[1], g.0[2] * g.0[2]];
    let a_inv = g2[0] * (1.0 / i1) + g2[1] * (1.0 / i2) + g2[2] * (1.0 / i3);
    let cyc = (g2[1] + g2[2]) * (1.0 / (i2 * i3))
        + (g2[0] + g2[2]) * (1.0 / (i1 * i3))
        + (g2[0] + g2[1]) * (1.0 / (i1 * i2));
    let f = (a_inv + cyc * b2 + Dual::constant(b2 * b2 / (i1 * i2 * i3)))
        * (i1 * i2 * i3 * k2);
    (p_th, p_ph, jk, f)
}

/// Antisymmetric coefficient matrix of `f (omega_can + (J,K))` in the chart
/// basis `dx_i ^ dx_j`, with exact inner derivatives.
fn two_form_matrix(
    x: [f64; 4],
    scene: &SceneParams,
    body: &BodyParams,
    exponent: f64,
) -> [[f64; 4]; 4] {
    let mut dp = [[0.0; 2]; 4];
    let mut value = (0.0, 0.0, 0.0, 0.0);
    for dir in 0..4 {
        let (p_th, p_ph, jk, f) = chart_data(x, dir, scene, body);
        dp[dir][0] = p_th.du;
        dp[dir][1] = p_ph.du;
        if dir == 0 {
            value = (p_th.re, p_ph.re, jk.re, f.re);
        }
    }
    let (_, _, jk, f_val) = value;
    let f = f_val.powf(exponent);
    let mut w = [[0.0; 4]; 4];
    // d(p_th dtheta): sum_k dp_th/dx_k dx_k ^ dx_0
    for k in 1..4 {
        w[0][k] -= dp[k][0];
    }
    // d(p_ph dphi): k = 0 lands on dx_0 ^ dx_1, k = 2,3 on dx_1 ^ dx_k
    w[0][1] += dp[0][1];
    for k in 2..4 {
        w[1][k] -= dp[k][1];
    }
    // (J,K) = jk * sin(theta) dtheta ^ dphi
    w[0][1] += jk * x[0].sin();
    for i in 0..4 {
        for j in (i + 1)..4 {
            w[i][j] *= f;
            w[j][i] = -w[i][j];
        }
    }
    w
}

/// Result of the closedness verification.
#[derive(Debug, Clone, Copy)]
pub struct ClosednessReport {
    pub max_residual: f64,
    pub samples: usize,
}

/// Max absolute coefficient of `d[f (omega_can + (J,K))]` over seeded chart
/// samples, all four independent 3-form coefficients per point; the inner
/// derivatives are exact, the outer ones central differences.
pub fn closedness_check(
    scene: &SceneParams,
    body: &BodyParams,
    samples: usize,
    seed: u64,
) -> ClosednessReport {
    closedness_check_with_exponent(scene, body, samples, seed, scene.exponent())
}

/// Same check with an explicit conformal exponent; used as a negative
/// control with a deliberately wrong exponent.
pub fn closedness_check_with_exponent(
    scene: &SceneParams,
    body: &BodyParams,
    samples: usize,
    seed: u64,
    exponent: f64,
) -> ClosednessReport {
    use rand::Rng;
    use rayon::prelude::*;
    let residuals: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample::rng_for(seed, index);
            let theta = loop {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                if t > tol::CHART_POLE_MARGIN && t < std::f64::consts::PI - tol::CHART_POLE_MARGIN {
                    break t;
                }
            };
            let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let x = [
                theta,
                phi,
                rng.sample::<f64, _>(rand_distr::StandardNormal),
                rng.sample::<f64, _>(rand_distr::StandardNormal),
            ];
            let h = tol::EXTERIOR_FD_STEP;
            let mut dw = [[[0.0; 4]; 4]; 4];
            for i in 0..4 {
                let mut xp = x;
                xp[i] += h;
                let mut xm = x;
                xm[i] -= h;
                let wp = two_form_matrix(xp, scene, body, exponent);
                let wm = two_form_matrix(xm, scene, body, exponent);
                for a in 0..4 {
                    for b in 0..4 {
                        dw[i][a][b] = (wp[a][b] - wm[a][b]) / (2.0 * h);
                    }
                }
            }
            let mut worst: f64 = 0.0;
            for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
                worst = worst.max((dw[i][j][k] - dw[j][i][k] + dw[k][i][j]).abs());
            }
            worst
        })
        .collect();
    ClosednessReport {
        max_residual: residuals.into_iter().fold(0.0, f64::max),
        samples,
    }
}

/// Reduced Hamiltonian value along a full trajectory sample: the compressed
/// energy evaluated through the Legendre pairing, `H = (p_gamma, gamma_dot)/2`.
pub fn reduced_hamiltonian_on_fiber(
    gamma: Vec3,
    gamma_dot: Vec3,
    scene: &SceneParams,
    body: &BodyParams,
) -> f64 {
    0.5 * reduced_legendre(gamma, gamma_dot, scene, body).dot(gamma_dot)
}

/// Gamma velocity of the compressed flow for a rubber full state.
pub fn compressed_gamma_rate(
    state: &crate::body::FullState,
    body: &BodyParams,
    scene: &SceneParams,
) -> Result<Vec3, DynamicsError> {
    let omega = crate::body::omega_from_momentum_rubber(state.momentum, state.gamma, body)?;
    Ok(state.gamma.cross(omega) * scene.kappa())
}
