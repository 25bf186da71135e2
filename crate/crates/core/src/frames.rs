//! Adapted frames along curves on spheres: extrinsic invariants, the
//! rolling relations between the invariants of matched contact curves, and
//! reconstruction of a spherical curve from its geodesic curvature.
//!
//! Convention: on a sphere of radius `rho` the exterior normal gives
//! `kappa_n = -1/rho` and `tau_g = 0` for every curve. Sign-sensitive
//! callers pick the orientation explicitly.

use crate::error::FrameError;
use crate::ode::{integrate, StepperSpec};
use crate::so3::Vec3;
use crate::tol;

/// Extrinsic invariants `(kappa_g, kappa_n, tau_g)` of a unit-speed curve on
/// an oriented surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInvariants {
    pub geodesic: f64,
    pub normal: f64,
    pub torsion: f64,
}

/// Which surface normal orients the adapted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalOrientation {
    Exterior,
    Interior,
}

impl NormalOrientation {
    fn sign(self) -> f64 {
        match self {
            NormalOrientation::Exterior => 1.0,
            NormalOrientation::Interior => -1.0,
        }
    }
}

/// An arclength-sampled curve on a sphere centered at the origin.
///
/// Samples carry unit tangents so that evaluation between nodes is cubic
/// Hermite, accurate enough for fourth-order invariant stencils.
#[derive(Debug, Clone)]
pub struct SphericalCurve {
    radius: f64,
    s: Vec<f64>,
    points: Vec<Vec3>,
    tangents: Vec<Vec3>,
}

const SAMPLE_TOL: f64 = 1e-6;

impl SphericalCurve {
    /// Builds a curve from samples that are already arclength-parametrized.
    pub fn from_samples(
        radius: f64,
        s: Vec<f64>,
        points: Vec<Vec3>,
        tangents: Vec<Vec3>,
    ) -> Result<Self, FrameError> {
        if s.len() < 5 {
            return Err(FrameError::TooFewSamples { needed: 5, got: s.len() });
        }
        assert_eq!(s.len(), points.len());
        assert_eq!(s.len(), tangents.len());
        for i in 1..s.len() {
            if !(s[i] > s[i - 1]) {
                return Err(FrameError::DegenerateSample { index: i });
            }
        }
        for (i, (p, t)) in points.iter().zip(&tangents).enumerate() {
            if (p.norm() - radius).abs() > SAMPLE_TOL * radius.max(1.0) {
                return Err(FrameError::OffSphere { index: i, radius });
            }
            if (t.norm() - 1.0).abs() > SAMPLE_TOL || t.dot(*p).abs() > SAMPLE_TOL * radius {
                return Err(FrameError::DegenerateSample { index: i });
            }
        }
        Ok(SphericalCurve { radius, s, points, tangents })
    }

    /// Builds a curve from bare points: re-parametrizes by cumulative chord
    /// length and recovers tangents by finite differences.
    pub fn from_points(radius: f64, points: Vec<Vec3>) -> Result<Self, FrameError> {
        if points.len() < 5 {
            return Err(FrameError::TooFewSamples { needed: 5, got: points.len() });
        }
        let mut s = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        s.push(0.0);
        for i in 1..points.len() {
            let step = (points[i] - points[i - 1]).norm();
            if step == 0.0 {
                return Err(FrameError::DegenerateSample { index: i });
            }
            acc += step;
            s.push(acc);
        }
        let n = points.len();
        let mut tangents = Vec::with_capacity(n);
        for i in 0..n {
            let d = if i >= 2 && i + 2 < n {
                fd_first(&points, &s, i)
            } else if i == 0 {
                (points[1] - points[0]) / (s[1] - s[0])
            } else if i == n - 1 {
                (points[n - 1] - points[n - 2]) / (s[n - 1] - s[n - 2])
            } else {
                (points[i + 1] - points[i - 1]) / (s[i + 1] - s[i - 1])
            };
            let t = d.normalized().ok_or(FrameError::DegenerateSample { index: i })?;
            // keep tangents exactly tangent to the sphere
            let p_unit = points[i] / points[i].norm();
            let t = t.reject_from_unit(p_unit)
                .normalized()
                .ok_or(FrameError::DegenerateSample { index: i })?;
            tangents.push(t);
        }
        SphericalCurve::from_samples(radius, s, points, tangents)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn s_range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, Vec3, Vec3)> + '_ {
        self.s
            .iter()
            .zip(&self.points)
            .zip(&self.tangents)
            .map(|((s, p), t)| (*s, *p, *t))
    }

    fn mean_spacing(&self) -> f64 {
        let (a, b) = self.s_range();
        (b - a) / (self.s.len() - 1) as f64
    }

    /// Cubic Hermite evaluation at arclength `s`.
    pub fn eval(&self, s: f64) -> Result<Vec3, FrameError> {
        let (lo, hi) = self.s_range();
        if s < lo - 1e-12 || s > hi + 1e-12 {
            return Err(FrameError::OutOfRange { s, min: lo, max: hi });
        }
        let s = s.clamp(lo, hi);
        let idx = match self.s.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.s.len() - 2),
        };
        let h = self.s[idx + 1] - self.s[idx];
        let u = (s - self.s[idx]) / h;
        let (p0, p1) = (self.points[idx], self.points[idx + 1]);
        let (m0, m1) = (self.tangents[idx] * h, self.tangents[idx + 1] * h);
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        Ok(p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11)
    }

    /// Serializes as CSV rows `s,x,y,z` (17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,z\n");
        for (s, p, _) in self.samples() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", s, p.x, p.y, p.z));
        }
        out
    }

    /// Parses CSV rows `s,x,y,z` (header optional); the `s` column is kept
    /// only if strictly increasing and consistent with chord lengths,
    /// otherwise points are re-parametrized.
    pub fn from_csv(radius: f64, text: &str) -> Result<Self, FrameError> {
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('s') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(FrameError::DegenerateSample { index: points.len() });
            }
            let parse = |f: &str| f.trim().parse::<f64>().map_err(|_| FrameError::DegenerateSample {
                index: points.len(),
            });
            let (_s, x, y, z) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
            points.push(Vec3::new(x, y, z));
        }
        SphericalCurve::from_points(radius, points)
    }
}

/// Fourth-order first derivative on the (nearly uniform) sample grid.
fn fd_first(points: &[Vec3], s: &[f64], i: usize) -> Vec3 {
    let h = (s[i + 1] - s[i - 1]) / 2.0;
    (points[i - 2] - points[i + 2] + (points[i + 1] - points[i - 1]) * 8.0) / (12.0 * h)
}

/// Extracts `(kappa_g, kappa_n, tau_g)` at arclength `s` by fourth-order
/// central differences on the interpolated curve.
///
/// `kappa_g = (q'' . u)/|q'|^2`, `kappa_n = (q'' . N)/|q'|^2`,
/// `tau_g = (N' . u)/|q'|` with `u = N x t`.
pub fn frame_invariants(
    curve: &SphericalCurve,
    s: f64,
    orientation: NormalOrientation,
) -> Result<FrameInvariants, FrameError> {
    let h = tol::CURVE_FD_FLOOR.max(10.0 * curve.mean_spacing());
    let (lo, hi) = curve.s_range();
    if s - 2.0 * h < lo || s + 2.0 * h > hi {
        return Err(FrameError::OutOfRange { s, min: lo + 2.0 * h, max: hi - 2.0 * h });
    }
    let q = |k: i32| curve.eval(s + k as f64 * h);
    let (qm2, qm1, q0, qp1, qp2) = (q(-2)?, q(-1)?, q(0)?, q(1)?, q(2)?);
    let d1 = (qm2 - qp2 + (qp1 - qm1) * 8.0) / (12.0 * h);
    let d2 = (-(qp2 + qm2) + (qp1 + qm1) * 16.0 - q0 * 30.0) / (12.0 * h * h);
    let v = d1.norm();
    if v < 1e-12 {
        return Err(FrameError::DegenerateSample { index: 0 });
    }
    let sign = orientation.sign();
    let normal = q0 * (sign / curve.radius());
    let t_hat = d1 / v;
    let u = normal.cross(t_hat);
    // N(s) sampled along the curve, differentiated by the same stencil
    let n_prime = (qm2 - qp2 + (qp1 - qm1) * 8.0) * (sign / (12.0 * h * curve.radius()));
    Ok(FrameInvariants {
        geodesic: d2.dot(u) / (v * v),
        normal: d2.dot(normal) / (v * v),
        torsion: n_prime.dot(u) / v,
    })
}

/// Instantaneous rotation vector of the adapted frame:
/// `omega_F = -tau_g t - kappa_n u + kappa_g N`.
pub fn frame_rotation_vector(
    inv: &FrameInvariants,
    frame: (Vec3, Vec3, Vec3),
) -> Result<Vec3, FrameError> {
    let (t, u, n) = frame;
    let defect = [
        (t.norm() - 1.0).abs(),
        (u.norm() - 1.0).abs(),
        (n.norm() - 1.0).abs(),
        t.dot(u).abs(),
        t.dot(n).abs(),
        u.dot(n).abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    if defect > 1e-9 {
        return Err(FrameError::NotOrthonormal { defect });
    }
    Ok(t * (-inv.torsion) + u * (-inv.normal) + n * inv.geodesic)
}

/// Relations between the invariants of matched contact curves under a
/// relative frame rotation rate `omega` expressed in the adapted frame:
/// `kappa_g' = kappa_g + w3`, `kappa_n' = kappa_n - w2`, `tau_g' = tau_g - w1`.
pub fn rolling_invariant_relations(inv: &FrameInvariants, omega: Vec3) -> FrameInvariants {
    FrameInvariants {
        geodesic: inv.geodesic + omega.z,
        normal: inv.normal - omega.y,
        torsion: inv.torsion - omega.x,
    }
}

/// Reconstructs a spherical curve from its geodesic curvature profile by
/// integrating `q'' = (kappa_g(s)/a) q x q' - q/a^2` with fixed-step RK4.
pub fn reconstruct_spherical_curve(
    kappa_g: &dyn Fn(f64) -> f64,
    radius: f64,
    q0: Vec3,
    t0: Vec3,
    s_end: f64,
    ds: f64,
) -> Result<SphericalCurve, FrameError> {
    let bad = |msg: String| FrameError::InconsistentInitialData(msg);
    if (q0.norm() - radius).abs() > 1e-9 * radius.max(1.0) {
        return Err(bad(format!("|q0| = {} but radius = {}", q0.norm(), radius)));
    }
    if (t0.norm() - 1.0).abs() > 1e-9 {
        return Err(bad(format!("|t0| = {} is not 1", t0.norm())));
    }
    if t0.dot(q0).abs() > 1e-9 * radius.max(1.0) {
        return Err(bad(format!("t0 . q0 = {} is not 0", t0.dot(q0))));
    }
    if !(s_end > 0.0) || !(ds > 0.0) {
        return Err(bad("need s_end > 0 and ds > 0".into()));
    }
    let mut s_nodes = Vec::new();
    let mut pts = Vec::new();
    let mut tans = Vec::new();
    let y0 = [q0.x, q0.y, q0.z, t0.x, t0.y, t0.z];
    let rhs = |s: f64, y: &[f64; 6]| {
        let q = Vec3::new(y[0], y[1], y[2]);
        let dq = Vec3::new(y[3], y[4], y[5]);
        let acc = q.cross(dq) * (kappa_g(s) / radius) - q / (radius * radius);
        [dq.x, dq.y, dq.z, acc.x, acc.y, acc.z]
    };
    let spec = StepperSpec { method: crate::ode::Method::FixedRk4 { dt: ds }, project: false };
    integrate(rhs, y0, (0.0, s_end), &spec, None, |s, y| {
        s_nodes.push(s);
        pts.push(Vec3::new(y[0], y[1], y[2]));
        tans.push(Vec3::new(y[3], y[4], y[5]));
    })
    .map_err(|e| bad(format!("integration failed: {e}")))?;
    // tangents come out unit up to integrator tolerance; normalize for the
    // Hermite interpolant but leave the points untouched so drift is visible
    for (i, t) in tans.iter_mut().enumerate() {
        *t = t.normalized().ok_or(FrameError::DegenerateSample { index: i })?;
    }
    SphericalCurve::from_samples(radius, s_nodes, pts, tans)
}
