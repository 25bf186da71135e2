//! `rolling` — configuration-driven runs, verification and sweeps for the
//! sphere-on-sphere rolling dynamics library.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 integration failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rolling_core::config::parse_config;
use rolling_core::frames;
use rolling_core::run::{run, sweep, RunError};
use rolling_core::verify::{run_verification, Scope};
use rolling_core::{chaplygin, tol, Vec3};

#[derive(Parser)]
#[command(name = "rolling", version, about = "rubber/marble rolling dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output path (overrides the config's `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides the config's `seed` key).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured trajectory and emit its CSV.
    Run(ConfigArgs),
    /// Run the registered verification suite.
    Verify {
        /// Module to check: all, so3, frames, body, chaplygin, spheroconical.
        #[arg(long, default_value = "all")]
        scope: String,
        #[arg(long, default_value_t = tol::DEFAULT_SEED)]
        seed: u64,
    },
    /// Run every point of the config's sweep grid and aggregate the drifts.
    Sweep(ConfigArgs),
    /// Compare the numerical loop holonomy with its closed form.
    Holonomy {
        /// Polar angular radius of the contact circle.
        #[arg(long)]
        theta: f64,
        /// Base sphere radius.
        #[arg(long, default_value_t = 1.0)]
        base_radius: f64,
        /// Rolling sphere radius (signed).
        #[arg(long)]
        rolling_radius: f64,
        /// Substeps of the loop integration.
        #[arg(long, default_value_t = tol::HOLONOMY_LOOP_STEPS)]
        steps: usize,
    },
    /// Reconstruct a spherical curve from a geodesic-curvature profile.
    Reconstruct {
        /// Sphere radius.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Constant geodesic curvature (exclusive with --kappa-file).
        #[arg(long)]
        kappa: Option<f64>,
        /// CSV file with rows `s,kappa_g`, linearly interpolated.
        #[arg(long)]
        kappa_file: Option<PathBuf>,
        /// Arclength to integrate.
        #[arg(long, default_value_t = 3.0)]
        length: f64,
        /// Integration step.
        #[arg(long, default_value_t = tol::RECONSTRUCT_DS)]
        ds: f64,
        /// Initial point, comma separated; defaults to (radius, 0, 0).
        #[arg(long)]
        q0: Option<String>,
        /// Initial unit tangent, comma separated; defaults to (0, 1, 0).
        #[arg(long)]
        t0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_triple(s: &str) -> Result<Vec3, String> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("`{s}` is not three comma-separated numbers"));
    }
    let p = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok(Vec3::new(p(parts[0])?, p(parts[1])?, p(parts[2])?))
}

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_INTEGRATION_FAILURE: u8 = 3;

fn fail(code: u8, message: String) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn run_error_code(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) => EXIT_CONFIG_ERROR,
        RunError::Dynamics(_) | RunError::SpheroConical(_) => EXIT_INTEGRATION_FAILURE,
    }
}

fn read_config(args: &ConfigArgs) -> Result<String, ExitCode> {
    let mut text = fs::read_to_string(&args.config)
        .map_err(|e| fail(EXIT_CONFIG_ERROR, format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        text = rolling_core::config::with_override(&text, "seed", &seed.to_string());
    }
    Ok(text)
}

fn write_output(path: Option<PathBuf>, default_name: &str, content: &str) -> Result<PathBuf, ExitCode> {
    let path = path.unwrap_or_else(|| PathBuf::from(default_name));
    fs::write(&path, content)
        .map_err(|e| fail(EXIT_INTEGRATION_FAILURE, format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let text = match read_config(&args) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let config = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG_ERROR, e.to_string()),
            };
            let output = match run(&config) {
                Ok(o) => o,
                Err(e) => return fail(run_error_code(&e), e.to_string()),
            };
            let out = args.out.or_else(|| config.out.clone().map(PathBuf::from));
            let path = match write_output(out, "trajectory.csv", &output.csv) {
                Ok(p) => p,
                Err(code) => return code,
            };
            for (k, v) in &output.summary {
                println!("{k} = {v}");
            }
            println!("trajectory written to {}", path.display());
            ExitCode::SUCCESS
        }
        Command::Verify { scope, seed } => {
            let Some(scope) = Scope::parse(&scope) else {
                return fail(
                    EXIT_CONFIG_ERROR,
                    format!("unknown scope `{scope}` (all|so3|frames|body|chaplygin|spheroconical)"),
                );
            };
            let report = run_verification(scope, seed);
            print!("{}", report.render_text());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILURE)
            }
        }
        Command::Sweep(args) => {
            let text = match read_config(&args) {
                Ok(t) => t,
                Err(code) => return code,
            };
            if let Err(e) = parse_config(&text) {
                return fail(EXIT_CONFIG_ERROR, e.to_string());
            }
            let (points, csv) = match sweep(&text) {
                Ok(r) => r,
                Err(e) => return fail(run_error_code(&e), e.to_string()),
            };
            let path = match write_output(args.out, "sweep.csv", &csv) {
                Ok(p) => p,
                Err(code) => return code,
            };
            let failed = points.iter().filter(|p| p.outcome.is_err()).count();
            println!("{} points, {} failed; aggregate written to {}", points.len(), failed, path.display());
            ExitCode::SUCCESS
        }
        Command::Holonomy { theta, base_radius, rolling_radius, steps } => {
            if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
                return fail(EXIT_CONFIG_ERROR, format!("theta = {theta} outside (0, pi/2)"));
            }
            if rolling_radius == 0.0 {
                return fail(EXIT_CONFIG_ERROR, "rolling radius must be nonzero".to_string());
            }
            let closed = chaplygin::holonomy_circle(theta, base_radius, rolling_radius);
            let rot = chaplygin::holonomy_loop_rotation(theta, base_radius, rolling_radius, steps);
            let expected = {
                let x = (2.0 * std::f64::consts::PI * closed.holonomy.abs())
                    .rem_euclid(2.0 * std::f64::consts::PI);
                x.min(2.0 * std::f64::consts::PI - x)
            };
            println!("holonomy = {:.16e}", closed.holonomy);
            println!("frame_rotation = {:.16e}", closed.frame_rotation);
            println!("loop_angle = {:.16e}", rot.angle());
            println!("closed_form_angle = {:.16e}", expected);
            println!("difference = {:.3e}", (rot.angle() - expected).abs());
            ExitCode::SUCCESS
        }
        Command::Reconstruct { radius, kappa, kappa_file, length, ds, q0, t0, out } => {
            let profile: Box<dyn Fn(f64) -> f64> = match (kappa, kappa_file) {
                (Some(k), None) => Box::new(move |_| k),
                (None, Some(path)) => {
                    let text = match fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => return fail(EXIT_CONFIG_ERROR, format!("{}: {e}", path.display())),
                    };
                    let mut table: Vec<(f64, f64)> = Vec::new();
                    for line in text.lines() {
                        let line = line.trim();
                        if line.is_empty() || line.starts_with('#') || line.starts_with('s') {
                            continue;
                        }
                        let mut it = line.split(',');
                        let (Some(s), Some(k)) = (it.next(), it.next()) else {
                            return fail(EXIT_CONFIG_ERROR, format!("bad profile row `{line}`"));
                        };
                        match (s.trim().parse::<f64>(), k.trim().parse::<f64>()) {
                            (Ok(s), Ok(k)) => table.push((s, k)),
                            _ => return fail(EXIT_CONFIG_ERROR, format!("bad profile row `{line}`")),
                        }
                    }
                    if table.len() < 2 {
                        return fail(EXIT_CONFIG_ERROR, "profile needs at least two rows".into());
                    }
                    Box::new(move |s: f64| {
                        let i = table.partition_point(|(sv, _)| *sv <= s).clamp(1, table.len() - 1);
                        let (s0, k0) = table[i - 1];
                        let (s1, k1) = table[i];
                        k0 + (k1 - k0) * ((s - s0) / (s1 - s0)).clamp(0.0, 1.0)
                    })
                }
                _ => {
                    return fail(
                        EXIT_CONFIG_ERROR,
                        "exactly one of --kappa and --kappa-file is required".into(),
                    )
                }
            };
            let q0 = match q0 {
                Some(s) => match parse_triple(&s) {
                    Ok(v) => v,
                    Err(e) => return fail(EXIT_CONFIG_ERROR, e),
                },
                None => Vec3::new(radius, 0.0, 0.0),
            };
            let t0 = match t0 {
                Some(s) => match parse_triple(&s) {
                    Ok(v) => v,
                    Err(e) => return fail(EXIT_CONFIG_ERROR, e),
                },
                None => Vec3::new(0.0, 1.0, 0.0),
            };
            let curve =
                match frames::reconstruct_spherical_curve(&*profile, radius, q0, t0, length, ds) {
                    Ok(c) => c,
                    Err(e) => return fail(EXIT_INTEGRATION_FAILURE, e.to_string()),
                };
            let path = match write_output(out, "curve.csv", &curve.to_csv()) {
                Ok(p) => p,
                Err(code) => return code,
            };
            println!("curve written to {}", path.display());
            ExitCode::SUCCESS
        }
    }
}
