//! Flat key-value run configuration with dotted sections.
//!
//! ```text
//! # rubber ball on the unit sphere
//! model = rubber
//! body.mu = 1.0
//! body.i1 = 1.0
//! body.i2 = 2.0
//! body.i3 = 3.0
//! body.b = 0.5
//! scene.a = 1.0          # or: plane
//! init.gamma = 1,1,1     # normalized; momentum projected to the constraint
//! init.l = 0.3,-0.2,0.5
//! stepper.dt = 1e-3
//! t_end = 100
//! ```
//!
//! Unknown keys are rejected; every invariant violation names the key.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::body::{BaseSurface, BodyParams, SceneParams};
use crate::ode::{Method, StepperSpec};
use crate::so3::Vec3;
use crate::spheroconical::Octant;
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("duplicate key `{key}`")]
    DuplicateKey { key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

/// Which system a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Rubber,
    Marble,
    Skiding,
    Reduced,
    Darboux,
}

impl Model {
    fn parse(s: &str) -> Option<Model> {
        Some(match s {
            "rubber" => Model::Rubber,
            "marble" => Model::Marble,
            "skiding" => Model::Skiding,
            "reduced" => Model::Reduced,
            "darboux" => Model::Darboux,
            _ => return None,
        })
    }
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub body: BodyParams,
    pub scene: SceneParams,
    /// Marble contact radius; defaults to the body's rolling radius.
    pub marble_radius: f64,
    pub init_gamma: Vec3,
    pub init_momentum: Vec3,
    /// Skiding initial data: contact point, velocity, spin momentum.
    pub init_contact: Vec3,
    pub init_contact_velocity: Vec3,
    pub init_spin: Vec3,
    /// Darboux initial data, if given directly.
    pub init_lambda: Option<[f64; 2]>,
    pub init_darboux_momenta: Option<[f64; 2]>,
    pub init_octant: Octant,
    pub stepper: StepperSpec,
    pub t_end: f64,
    pub seed: u64,
    pub out: Option<String>,
    /// Sweep grid: key -> candidate raw values.
    pub sweep: Vec<(String, Vec<String>)>,
}

/// Documented generic initial data: `gamma` along the diagonal, momentum
/// projected onto the rubber constraint at run time.
pub const DEFAULT_GAMMA: [f64; 3] = [1.0, 1.0, 1.0];
pub const DEFAULT_MOMENTUM: [f64; 3] = [0.3, -0.2, 0.5];

const KNOWN_KEYS: &[&str] = &[
    "model", "body.mu", "body.i1", "body.i2", "body.i3", "body.b", "scene.a", "marble.r",
    "init.gamma", "init.l", "init.q", "init.qdot", "init.m", "init.lambda", "init.p",
    "init.octant", "stepper.method", "stepper.dt", "stepper.abs_tol", "stepper.rel_tol",
    "stepper.project", "t_end", "seed", "out",
];

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Invalid {
        key: key.to_string(),
        reason: format!("`{v}` is not a number"),
    })
}

fn parse_vec3(key: &str, v: &str) -> Result<Vec3, ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::Invalid {
            key: key.to_string(),
            reason: "expected three comma-separated numbers".to_string(),
        });
    }
    Ok(Vec3::new(
        parse_f64(key, parts[0])?,
        parse_f64(key, parts[1])?,
        parse_f64(key, parts[2])?,
    ))
}

/// Parses and validates the flat key-value text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut sweep: Vec<(String, Vec<String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: lineno + 1 })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if let Some(grid_key) = key.strip_prefix("sweep.") {
            if !KNOWN_KEYS.contains(&grid_key) {
                return Err(ConfigError::UnknownKey { key: key.clone() });
            }
            sweep.push((
                grid_key.to_string(),
                value.split('|').map(|v| v.trim().to_string()).collect(),
            ));
            continue;
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { key });
        }
    }
    build_config(&map, sweep)
}

fn build_config(
    map: &BTreeMap<String, String>,
    sweep: Vec<(String, Vec<String>)>,
) -> Result<RunConfig, ConfigError> {
    let get = |key: &'static str| map.get(key);
    let model = match get("model") {
        None => Model::Rubber,
        Some(v) => Model::parse(v).ok_or_else(|| ConfigError::Invalid {
            key: "model".into(),
            reason: format!("`{v}` is not one of rubber|marble|skiding|reduced|darboux"),
        })?,
    };
    let req = |key: &'static str| get(key).ok_or(ConfigError::MissingKey { key });
    let mu = parse_f64("body.mu", req("body.mu")?)?;
    let i1 = parse_f64("body.i1", req("body.i1")?)?;
    let i2 = parse_f64("body.i2", req("body.i2")?)?;
    let i3 = parse_f64("body.i3", req("body.i3")?)?;
    let b = parse_f64("body.b", req("body.b")?)?;
    let body = BodyParams::new(mu, [i1, i2, i3], b).map_err(|e| ConfigError::Invalid {
        key: "body".into(),
        reason: e.to_string(),
    })?;
    let scene_raw = req("scene.a")?;
    let base = if scene_raw == "plane" {
        BaseSurface::Plane
    } else {
        BaseSurface::Sphere { radius: parse_f64("scene.a", scene_raw)? }
    };
    let scene = SceneParams::new(base, &body).map_err(|e| ConfigError::Invalid {
        key: "scene.a".into(),
        reason: match e {
            crate::error::ParamError::KappaUndefined => "kappa undefined (a + b = 0)".to_string(),
            other => other.to_string(),
        },
    })?;
    let marble_radius = match get("marble.r") {
        Some(v) => {
            let r = parse_f64("marble.r", v)?;
            if r == 0.0 {
                return Err(ConfigError::Invalid {
                    key: "marble.r".into(),
                    reason: "contact radius must be nonzero".into(),
                });
            }
            r
        }
        None => body.radius,
    };
    let init_gamma = match get("init.gamma") {
        Some(v) => parse_vec3("init.gamma", v)?,
        None => Vec3::from_array(DEFAULT_GAMMA),
    };
    let init_gamma = init_gamma.normalized().ok_or_else(|| ConfigError::Invalid {
        key: "init.gamma".into(),
        reason: "zero vector cannot be normalized".into(),
    })?;
    let init_momentum = match get("init.l") {
        Some(v) => parse_vec3("init.l", v)?,
        None => Vec3::from_array(DEFAULT_MOMENTUM),
    };
    let init_contact = match get("init.q") {
        Some(v) => parse_vec3("init.q", v)?,
        None => match scene.base_radius() {
            Some(a) => Vec3::new(a, 0.0, 0.0),
            None => Vec3::new(1.0, 0.0, 0.0),
        },
    };
    let init_contact_velocity = match get("init.qdot") {
        Some(v) => parse_vec3("init.qdot", v)?,
        None => Vec3::new(0.0, 0.5, 0.0),
    };
    let init_spin = match get("init.m") {
        Some(v) => parse_vec3("init.m", v)?,
        None => Vec3::from_array(DEFAULT_MOMENTUM),
    };
    let init_lambda = match get("init.lambda") {
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ConfigError::Invalid {
                    key: "init.lambda".into(),
                    reason: "expected two comma-separated numbers".into(),
                });
            }
            Some([parse_f64("init.lambda", parts[0])?, parse_f64("init.lambda", parts[1])?])
        }
        None => None,
    };
    let init_darboux_momenta = match get("init.p") {
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ConfigError::Invalid {
                    key: "init.p".into(),
                    reason: "expected two comma-separated numbers".into(),
                });
            }
            Some([parse_f64("init.p", parts[0])?, parse_f64("init.p", parts[1])?])
        }
        None => None,
    };
    let init_octant = match get("init.octant") {
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            let sign = |s: &str| match s {
                "+" | "+1" | "1" => Ok(1i8),
                "-" | "-1" => Ok(-1i8),
                other => Err(ConfigError::Invalid {
                    key: "init.octant".into(),
                    reason: format!("`{other}` is not a sign"),
                }),
            };
            if parts.len() != 3 {
                return Err(ConfigError::Invalid {
                    key: "init.octant".into(),
                    reason: "expected three comma-separated signs".into(),
                });
            }
            Octant([sign(parts[0])?, sign(parts[1])?, sign(parts[2])?])
        }
        None => Octant::of(init_gamma),
    };
    let method = match get("stepper.method").map(String::as_str) {
        None | Some("rk4") => Method::FixedRk4 {
            dt: match get("stepper.dt") {
                Some(v) => parse_f64("stepper.dt", v)?,
                None => tol::DEFAULT_DT,
            },
        },
        Some("rk45") => Method::AdaptiveRk45 {
            abs_tol: match get("stepper.abs_tol") {
                Some(v) => parse_f64("stepper.abs_tol", v)?,
                None => tol::DEFAULT_ABS_TOL,
            },
            rel_tol: match get("stepper.rel_tol") {
                Some(v) => parse_f64("stepper.rel_tol", v)?,
                None => tol::DEFAULT_REL_TOL,
            },
        },
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "stepper.method".into(),
                reason: format!("`{other}` is not rk4|rk45"),
            })
        }
    };
    let project = match get("stepper.project").map(String::as_str) {
        None | Some("true") => true,
        Some("false") => false,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "stepper.project".into(),
                reason: format!("`{other}` is not true|false"),
            })
        }
    };
    let stepper = StepperSpec { method, project };
    stepper.validate().map_err(|e| ConfigError::Invalid {
        key: "stepper".into(),
        reason: e.to_string(),
    })?;
    let t_end = match get("t_end") {
        Some(v) => parse_f64("t_end", v)?,
        None => 10.0,
    };
    if !(t_end > 0.0) {
        return Err(ConfigError::Invalid {
            key: "t_end".into(),
            reason: format!("must be positive, got {t_end}"),
        });
    }
    let seed = match get("seed") {
        Some(v) => v.parse::<u64>().map_err(|_| ConfigError::Invalid {
            key: "seed".into(),
            reason: format!("`{v}` is not an unsigned integer"),
        })?,
        None => tol::DEFAULT_SEED,
    };
    Ok(RunConfig {
        model,
        body,
        scene,
        marble_radius,
        init_gamma,
        init_momentum,
        init_contact,
        init_contact_velocity,
        init_spin,
        init_lambda,
        init_darboux_momenta,
        init_octant,
        stepper,
        t_end,
        seed,
        out: get("out").cloned(),
        sweep,
    })
}

/// Re-parses the config text with one key overridden (used by sweeps).
pub fn with_override(text: &str, key: &str, value: &str) -> String {
    let mut out = String::new();
    let mut replaced = false;
    for line in text.lines() {
        let content = line.split('#').next().unwrap_or("").trim();
        let is_key = content
            .split_once('=')
            .map(|(k, _)| k.trim() == key)
            .unwrap_or(false);
        let is_sweep = content.starts_with("sweep.");
        if is_key {
            out.push_str(&format!("{key} = {value}\n"));
            replaced = true;
        } else if !is_sweep {
            out.push_str(line);
            out.push('\n');
        }
    }
    if !replaced {
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}
