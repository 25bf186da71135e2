//! Fixed-step RK4 and embedded Dormand-Prince 5(4) integration with
//! optional post-step state projection.
//!
//! States are fixed-size arrays; the rhs never allocates. Results are
//! deterministic for identical inputs.

use crate::error::OdeError;

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical RK4 with a fixed step.
    FixedRk4 { dt: f64 },
    /// Dormand-Prince 5(4) with per-component error control
    /// `|e_i| <= abs_tol + rel_tol * |y_i|`.
    AdaptiveRk45 { abs_tol: f64, rel_tol: f64 },
}

/// Stepper configuration: method plus whether the projector runs after each
/// accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperSpec {
    pub method: Method,
    pub project: bool,
}

impl StepperSpec {
    pub fn fixed(dt: f64) -> StepperSpec {
        StepperSpec { method: Method::FixedRk4 { dt }, project: true }
    }

    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> StepperSpec {
        StepperSpec { method: Method::AdaptiveRk45 { abs_tol, rel_tol }, project: true }
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        match self.method {
            Method::FixedRk4 { dt } => {
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(OdeError::BadSpec(format!("step size must be positive, got {dt}")));
                }
            }
            Method::AdaptiveRk45 { abs_tol, rel_tol } => {
                if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
                    return Err(OdeError::BadSpec(format!(
                        "tolerances must be positive, got abs {abs_tol}, rel {rel_tol}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for StepperSpec {
    fn default() -> Self {
        StepperSpec::fixed(crate::tol::DEFAULT_DT)
    }
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    let mut r = *y;
    for i in 0..N {
        r[i] += a * x[i];
    }
    r
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    rhs: &mut F,
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1));
    let k3 = rhs(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2));
    let k4 = rhs(t + dt, &axpy(y, dt, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
    -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0,
];

/// Integrates `dy/dt = rhs(t, y)` over `t_span`, calling `sink` at `t0` and
/// after every accepted step, applying `projector` first when enabled.
///
/// Returns the final state. Adaptive step underflow reports the failure
/// time.
pub fn integrate<const N: usize, F, S>(
    mut rhs: F,
    y0: [f64; N],
    t_span: (f64, f64),
    spec: &StepperSpec,
    projector: Option<&dyn Fn(&mut [f64; N])>,
    mut sink: S,
) -> Result<[f64; N], OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    spec.validate()?;
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(OdeError::DegenerateSpan { t0, t1 });
    }
    let mut t = t0;
    let mut y = y0;
    sink(t, &y);

    let check_finite = |t: f64, y: &[f64; N]| -> Result<(), OdeError> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(OdeError::NonFiniteState { time: t })
        }
    };

    match spec.method {
        Method::FixedRk4 { dt } => {
            // integral number of full steps, then one shortened step if needed
            let span = t1 - t0;
            let n_full = (span / dt).floor() as u64;
            let mut step_index = 0u64;
            while step_index < n_full {
                y = rk4_step(&mut rhs, t, &y, dt);
                step_index += 1;
                t = t0 + step_index as f64 * dt;
                if let Some(p) = projector.filter(|_| spec.project) {
                    p(&mut y);
                }
                check_finite(t, &y)?;
                sink(t, &y);
            }
            let rem = t1 - t;
            if rem > 1e-12 * span.max(1.0) {
                y = rk4_step(&mut rhs, t, &y, rem);
                t = t1;
                if let Some(p) = projector.filter(|_| spec.project) {
                    p(&mut y);
                }
                check_finite(t, &y)?;
                sink(t, &y);
            }
            Ok(y)
        }
        Method::AdaptiveRk45 { abs_tol, rel_tol } => {
            let mut dt = ((t1 - t0) / 100.0).min(1e-2).max(1e-10);
            let dt_min_scale = 1e-14;
            while t < t1 {
                let dt_min = dt_min_scale * t.abs().max(1.0);
                if dt < dt_min {
                    return Err(OdeError::StepUnderflow { time: t });
                }
                dt = dt.min(t1 - t);
                let mut k = [[0.0; N]; 7];
                k[0] = rhs(t, &y);
                for stage in 0..6 {
                    let mut ytmp = y;
                    for j in 0..=stage {
                        let a = DP_A[stage][j];
                        if a != 0.0 {
                            for i in 0..N {
                                ytmp[i] += dt * a * k[j][i];
                            }
                        }
                    }
                    k[stage + 1] = rhs(t + DP_C[stage] * dt, &ytmp);
                }
                let mut y5 = y;
                let mut err: f64 = 0.0;
                for i in 0..N {
                    let mut v5 = 0.0;
                    let mut v4 = 0.0;
                    for j in 0..7 {
                        v5 += DP_B5[j] * k[j][i];
                        v4 += DP_B4[j] * k[j][i];
                    }
                    y5[i] += dt * v5;
                    let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
                    err = err.max((dt * (v5 - v4)).abs() / scale);
                }
                if err <= 1.0 && y5.iter().all(|v| v.is_finite()) {
                    t += dt;
                    y = y5;
                    if let Some(p) = projector.filter(|_| spec.project) {
                        p(&mut y);
                    }
                    sink(t, &y);
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    dt *= grow;
                } else if !y5.iter().all(|v| v.is_finite()) {
                    dt *= 0.1;
                } else {
                    dt *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
            }
            Ok(y)
        }
    }
}
