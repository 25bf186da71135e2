//! Simulation drivers behind the CLI: single runs, parameter sweeps, and
//! their CSV outputs. All numbers are written with 17 significant digits so
//! downstream finite-difference analysis is not quantization-limited, and
//! identical `(config, seed)` inputs give bit-identical files.

use rayon::prelude::*;
use thiserror::Error;

use crate::body::{
    marble_integrals, project_momentum_to_constraint, simulate, skiding_energy, skiding_rate,
    FullState, RollingModel, SkidingState,
};
use crate::chaplygin::{reduced_hamiltonian_on_fiber, reduced_legendre};
use crate::config::{parse_config, with_override, ConfigError, Model, RunConfig};
use crate::error::{DynamicsError, SpheroConicalError};
use crate::ode::integrate;
use crate::so3::{Rot3, Vec3};
use crate::spheroconical::{
    darboux_momenta, integrate_darboux, lambda_from_gamma, lambda_rates, separability_check,
    DarbouxState, SpheroConicalPoint,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("integration failed: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("chart failure: {0}")]
    SpheroConical(#[from] SpheroConicalError),
}

/// One finished run: the trajectory file content and a drift summary.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: String,
    pub summary: Vec<(String, String)>,
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn target_rows(steps: usize) -> usize {
    // decimate long runs to keep files manageable, deterministically
    const MAX_ROWS: usize = 20_000;
    if steps <= MAX_ROWS {
        1
    } else {
        steps.div_ceil(MAX_ROWS)
    }
}

/// Executes a validated configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    match config.model {
        Model::Rubber | Model::Marble => run_rolling(config),
        Model::Skiding => run_skiding(config),
        Model::Reduced => run_reduced(config),
        Model::Darboux => run_darboux(config),
    }
}

fn rolling_initial_state(config: &RunConfig) -> FullState {
    let gamma = config.init_gamma;
    let momentum = match config.model {
        Model::Rubber | Model::Reduced => {
            project_momentum_to_constraint(config.init_momentum, gamma, &config.body)
        }
        _ => config.init_momentum,
    };
    FullState { attitude: Rot3::IDENTITY, gamma, momentum }
}

fn run_rolling(config: &RunConfig) -> Result<RunOutput, RunError> {
    let model = match config.model {
        Model::Rubber => RollingModel::Rubber,
        Model::Marble => RollingModel::Marble { contact_radius: config.marble_radius },
        _ => unreachable!(),
    };
    let state0 = rolling_initial_state(config);
    let steps = match config.stepper.method {
        crate::ode::Method::FixedRk4 { dt } => (config.t_end / dt).ceil() as usize,
        crate::ode::Method::AdaptiveRk45 { .. } => 10_000,
    };
    let traj = simulate(model, &state0, &config.body, &config.scene, config.t_end,
                        &config.stepper, target_rows(steps))?;
    let mut csv = String::from(
        "t,gamma1,gamma2,gamma3,l1,l2,l3,r11,r12,r13,r21,r22,r23,r31,r32,r33,energy,constraint_residual\n",
    );
    for (i, s) in traj.states.iter().enumerate() {
        let m = s.attitude.matrix().0;
        let row = [
            traj.times[i],
            s.gamma.x, s.gamma.y, s.gamma.z,
            s.momentum.x, s.momentum.y, s.momentum.z,
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            traj.energies[i],
            traj.constraint_residuals[i],
        ];
        csv.push_str(&row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    let mut summary = vec![
        ("model".to_string(), format!("{:?}", config.model).to_lowercase()),
        ("kappa".to_string(), fmt(config.scene.kappa())),
        ("energy_rel_drift".to_string(), fmt(traj.energy_drift())),
    ];
    match config.model {
        Model::Rubber => {
            summary.push((
                "max_constraint_residual".to_string(),
                fmt(traj.max_constraint_residual()),
            ));
        }
        Model::Marble => {
            let f0 = marble_integrals(&traj.states[0], &config.body, config.marble_radius)?;
            let mut drift = [0.0f64; 4];
            for s in &traj.states {
                let f = marble_integrals(s, &config.body, config.marble_radius)?;
                for k in 0..4 {
                    drift[k] = drift[k].max((f[k] - f0[k]).abs());
                }
            }
            for (k, d) in drift.iter().enumerate() {
                summary.push((format!("f{}_drift", k + 1), fmt(*d)));
            }
        }
        _ => {}
    }
    Ok(RunOutput { csv, summary })
}

fn run_skiding(config: &RunConfig) -> Result<RunOutput, RunError> {
    let a = config.scene.base_radius().ok_or_else(|| {
        RunError::Config(ConfigError::Invalid {
            key: "scene.a".into(),
            reason: "skiding needs a spherical base".into(),
        })
    })?;
    let q0 = config.init_contact;
    let q0 = q0.normalized().map(|n| n * a).unwrap_or(Vec3::new(a, 0.0, 0.0));
    let v0 = config.init_contact_velocity.reject_from_unit(q0 / a);
    let st = SkidingState {
        contact: q0,
        contact_velocity: v0,
        attitude: Rot3::IDENTITY,
        spin: config.init_spin,
    };
    let body = config.body;
    let scene = config.scene;
    let e0 = skiding_energy(&st, &body, &scene);
    let spin2_0 = st.spin.norm_squared();
    let mut csv = String::from("t,q1,q2,q3,v1,v2,v3,m1,m2,m3,energy\n");
    let steps = match config.stepper.method {
        crate::ode::Method::FixedRk4 { dt } => (config.t_end / dt).ceil() as usize,
        _ => 10_000,
    };
    let every = target_rows(steps);
    let mut count = 0usize;
    let mut drifts = (0.0f64, 0.0f64, 0.0f64);
    let rhs = |_t: f64, y: &[f64; 18]| skiding_rate(&SkidingState::from_array(y), &body, &scene);
    integrate(rhs, st.to_array(), (0.0, config.t_end), &config.stepper, None, |t, y| {
        let s = SkidingState::from_array(y);
        let e = skiding_energy(&s, &body, &scene);
        drifts.0 = drifts.0.max((e - e0).abs() / e0.abs().max(1e-30));
        drifts.1 = drifts.1.max((s.spin.norm_squared() - spin2_0).abs());
        drifts.2 = drifts.2.max((s.contact.norm() - a).abs());
        if count % every == 0 {
            let row = [
                t,
                s.contact.x, s.contact.y, s.contact.z,
                s.contact_velocity.x, s.contact_velocity.y, s.contact_velocity.z,
                s.spin.x, s.spin.y, s.spin.z,
                e,
            ];
            csv.push_str(&row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(","));
            csv.push('\n');
        }
        count += 1;
    })
    .map_err(DynamicsError::from)?;
    let summary = vec![
        ("model".to_string(), "skiding".to_string()),
        ("energy_rel_drift".to_string(), fmt(drifts.0)),
        ("euler_momentum_drift".to_string(), fmt(drifts.1)),
        ("geodesic_radius_drift".to_string(), fmt(drifts.2)),
    ];
    Ok(RunOutput { csv, summary })
}

fn run_reduced(config: &RunConfig) -> Result<RunOutput, RunError> {
    // the attitude decouples; integrate (gamma, L) and report the reduced
    // Hamiltonian through the Legendre pairing
    let body = config.body;
    let scene = config.scene;
    let st = rolling_initial_state(config);
    let y0 = [st.gamma.x, st.gamma.y, st.gamma.z, st.momentum.x, st.momentum.y, st.momentum.z];
    let rhs = move |_t: f64, y: &[f64; 6]| {
        let gamma = Vec3::new(y[0], y[1], y[2]);
        let momentum = Vec3::new(y[3], y[4], y[5]);
        let omega = body.a_tilde_solve(body.radius, momentum);
        let tau = crate::body::rubber_multiplier(momentum, gamma, &body, scene.kappa());
        let gd = gamma.cross(omega) * scene.kappa();
        let ld = gamma * tau - omega.cross(momentum);
        [gd.x, gd.y, gd.z, ld.x, ld.y, ld.z]
    };
    let projector = |y: &mut [f64; 6]| {
        if let Some(n) = Vec3::new(y[0], y[1], y[2]).normalized() {
            y[0] = n.x;
            y[1] = n.y;
            y[2] = n.z;
        }
    };
    let mut csv = String::from("t,gamma1,gamma2,gamma3,p1,p2,p3,hamiltonian\n");
    let steps = match config.stepper.method {
        crate::ode::Method::FixedRk4 { dt } => (config.t_end / dt).ceil() as usize,
        _ => 10_000,
    };
    let every = target_rows(steps);
    let mut count = 0usize;
    let mut h0 = None;
    let mut drift = 0.0f64;
    integrate(rhs, y0, (0.0, config.t_end), &config.stepper, Some(&projector), |t, y| {
        let gamma = Vec3::new(y[0], y[1], y[2]);
        let momentum = Vec3::new(y[3], y[4], y[5]);
        let omega = body.a_tilde_solve(body.radius, momentum);
        let gd = gamma.cross(omega) * scene.kappa();
        let p = reduced_legendre(gamma, gd, &scene, &body);
        let h = reduced_hamiltonian_on_fiber(gamma, gd, &scene, &body);
        let h0 = *h0.get_or_insert(h);
        drift = drift.max((h - h0).abs() / h0.abs().max(1e-30));
        if count % every == 0 {
            let row = [t, gamma.x, gamma.y, gamma.z, p.x, p.y, p.z, h];
            csv.push_str(&row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(","));
            csv.push('\n');
        }
        count += 1;
    })
    .map_err(DynamicsError::from)?;
    let summary = vec![
        ("model".to_string(), "reduced".to_string()),
        ("reduced_hamiltonian_rel_drift".to_string(), fmt(drift)),
    ];
    Ok(RunOutput { csv, summary })
}

fn run_darboux(config: &RunConfig) -> Result<RunOutput, RunError> {
    let body = config.body;
    let scene = config.scene;
    let state0 = match (config.init_lambda, config.init_darboux_momenta) {
        (Some(l), Some(p)) => DarbouxState { lambda1: l[0], lambda2: l[1], p1: p[0], p2: p[1] },
        _ => {
            // derive the chart state from (gamma, L) initial data
            let gamma = config.init_gamma;
            let momentum = project_momentum_to_constraint(config.init_momentum, gamma, &body);
            let omega = body.a_tilde_solve(body.radius, momentum);
            let gd = gamma.cross(omega) * scene.kappa();
            let pt = lambda_from_gamma(gamma, &body)?;
            let rates = lambda_rates(gamma, gd, &pt, &body);
            darboux_momenta(&pt, rates, &scene, &body)
        }
    };
    let dtau = match config.stepper.method {
        crate::ode::Method::FixedRk4 { dt } => dt,
        _ => crate::tol::DEFAULT_DT,
    };
    let traj = integrate_darboux(&state0, &scene, &body, config.t_end, dtau)?;
    let every = target_rows(traj.states.len());
    let mut csv = String::from("tau,lambda1,lambda2,p1,p2,hamiltonian,t\n");
    for (i, s) in traj.states.iter().enumerate() {
        if i % every != 0 && i + 1 != traj.states.len() {
            continue;
        }
        let row = [traj.tau[i], s.lambda1, s.lambda2, s.p1, s.p2, traj.hamiltonians[i], traj.times[i]];
        csv.push_str(&row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    let sep = separability_check(&scene, &body, 64, config.seed)?;
    let mut summary = vec![
        ("model".to_string(), "darboux".to_string()),
        ("hamiltonian_rel_drift".to_string(), fmt(traj.hamiltonian_drift())),
        ("separability_residual".to_string(), fmt(sep.residual)),
        ("separable".to_string(), sep.separable.to_string()),
    ];
    if let Some(tau) = traj.boundary_tau {
        summary.push(("boundary_tau".to_string(), fmt(tau)));
    }
    Ok(RunOutput { csv, summary })
}

/// One sweep point: overrides applied, run executed, failures recorded.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub overrides: Vec<(String, String)>,
    pub outcome: Result<Vec<(String, String)>, String>,
}

/// Runs the cartesian product of the sweep grid declared in the config
/// text; per-point failures are recorded and the batch continues.
pub fn sweep(config_text: &str) -> Result<(Vec<SweepPoint>, String), RunError> {
    let base = parse_config(config_text)?;
    let grid = &base.sweep;
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in grid {
        let mut next = Vec::new();
        for p in &points {
            for v in values {
                let mut q = p.clone();
                q.push((key.clone(), v.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    let results: Vec<SweepPoint> = points
        .par_iter()
        .map(|overrides| {
            let mut text = config_text.to_string();
            for (k, v) in overrides {
                text = with_override(&text, k, v);
            }
            let outcome = parse_config(&text)
                .map_err(RunError::from)
                .and_then(|cfg| run(&cfg))
                .map(|out| out.summary)
                .map_err(|e| e.to_string());
            SweepPoint { overrides: overrides.clone(), outcome }
        })
        .collect();
    // aggregate table: union of summary keys in first-seen order
    let mut columns: Vec<String> = Vec::new();
    for p in &results {
        if let Ok(summary) = &p.outcome {
            for (k, _) in summary {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    let mut csv = String::from("index,overrides,status");
    for c in &columns {
        csv.push(',');
        csv.push_str(c);
    }
    csv.push('\n');
    for (i, p) in results.iter().enumerate() {
        let ov = p
            .overrides
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        match &p.outcome {
            Ok(summary) => {
                csv.push_str(&format!("{i},{ov},ok"));
                for c in &columns {
                    csv.push(',');
                    if let Some((_, v)) = summary.iter().find(|(k, _)| k == c) {
                        csv.push_str(v);
                    }
                }
                csv.push('\n');
            }
            Err(e) => {
                csv.push_str(&format!("{i},{ov},error: {}\n", e.replace(',', ";")));
            }
        }
    }
    Ok((results, csv))
}

/// Convenience: parse and run in one go (used by the CLI and tests).
pub fn run_text(config_text: &str) -> Result<RunOutput, RunError> {
    let cfg = parse_config(config_text)?;
    run(&cfg)
}

/// Derives the sphero-conical chart point of the configured initial data;
/// exposed for tests that cross-check the darboux model.
pub fn initial_chart_point(config: &RunConfig) -> Result<SpheroConicalPoint, RunError> {
    Ok(lambda_from_gamma(config.init_gamma, &config.body)?)
}
