use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use canfield_core::full_joint::BranchId;
use canfield_core::geometry::{Vec3, DEFAULT_TOL};
use canfield_core::joint_model::{base_layout, boundary_theta, wrap_tau, JointParams};
use canfield_core::oracle::{arm_preimage_oracle, planar_oracle, OracleClass, OracleSettings};
use canfield_core::single_arm::{
    forward_arm, inverse_arm, planar_fourbar_solve, ControlTriple, PlanarPreimage, PreimageClass,
};
use canfield_core::workspace::{
    export_cloud, solid_angle_fraction, sweep_broken_arm, BranchPolicy, ExportFormat, SweepSpec,
};
use canfield_core::Error;
use canfield_service::api::{self, ApiError};
use canfield_service::{FkRequest, ServiceConfig, SolveRequest};
use clap::{Args, Parser, Subcommand};

const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_IO: u8 = 4;

/// Kinematics toolkit for the Canfield Joint under the (θ, p, φ) control scheme.
#[derive(Parser)]
#[command(name = "canfield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Dims {
    /// Length of each arm segment.
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    ell: f64,
    /// Distance between hinges on a plate.
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    b: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the joint for one (θ, p, φ) and print every branch as JSON.
    Solve {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        phi_deg: f64,
        /// Only report this branch (PP, PM, MP or MM).
        #[arg(long)]
        branch: Option<BranchId>,
    },
    /// Sweep (p, φ) with θ₁ fixed and export the reachable poses.
    Sweep {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
        #[arg(long, default_value_t = 100)]
        p_samples: usize,
        #[arg(long, default_value_t = 100)]
        phi_samples: usize,
        /// csv, ply or json.
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
        /// Target cell count of the sphere partition used for coverage.
        #[arg(long, default_value_t = api::DEFAULT_BINS)]
        bins: usize,
        /// "all" or a single branch.
        #[arg(long, default_value = "all")]
        branch: BranchPolicy,
    },
    /// Find (p, φ, branch) from the three base angles.
    Fk {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, allow_negative_numbers = true)]
        theta1_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta2_deg: f64,
        #[arg(long, allow_negative_numbers = true)]
        theta3_deg: f64,
    },
    /// Cross-check solution counts against brute-force grid solvers.
    Oracle {
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8787")]
        listen: SocketAddr,
        /// Origin allowed to call the API from a browser; any origin if unset.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

/// A closed stdout (for example `| head`) is not an error worth a panic.
fn print_json(value: &impl serde::Serialize) {
    let mut out = io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, value)
        .and_then(|_| writeln!(out).map_err(serde_json::Error::io));
}

fn api_failure(e: ApiError) -> ExitCode {
    eprintln!("canfield: {e}");
    match e {
        ApiError::BadRequest { .. } | ApiError::TooLarge(_) => ExitCode::from(EXIT_USAGE),
        ApiError::Internal(_) => ExitCode::FAILURE,
    }
}

fn solve(dims: Dims, theta_deg: f64, p: f64, phi_deg: f64, branch: Option<BranchId>) -> ExitCode {
    let req = SolveRequest {
        ell: dims.ell,
        b: dims.b,
        theta_deg,
        p,
        phi_deg,
        branch,
    };
    match api::solve(&req) {
        Ok(res) => {
            print_json(&res);
            if res.valid {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "canfield: invalid configuration: {}",
                    res.reason.as_deref().unwrap_or("unknown")
                );
                ExitCode::from(EXIT_INVALID)
            }
        }
        Err(e) => api_failure(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    dims: Dims,
    theta_deg: f64,
    p_samples: usize,
    phi_samples: usize,
    format: ExportFormat,
    out: PathBuf,
    bins: usize,
    branch: BranchPolicy,
) -> ExitCode {
    let params = match JointParams::new(dims.ell, dims.b) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("canfield: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let spec = SweepSpec {
        branch_policy: branch,
        ..SweepSpec::new(theta_deg.to_radians(), p_samples, phi_samples)
    };
    let cloud = match sweep_broken_arm(&params, &spec, DEFAULT_TOL) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("canfield: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = export_cloud(&cloud, format, &out) {
        eprintln!("canfield: {e}");
        return ExitCode::from(EXIT_IO);
    }
    let coverage = match solid_angle_fraction(&cloud, bins) {
        Ok(c) => Some(c),
        Err(Error::EmptyCloud) => {
            eprintln!("canfield: warning: {}", Error::EmptyWorkspace);
            None
        }
        Err(e) => {
            eprintln!("canfield: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    print_json(&serde_json::json!({
        "out": out,
        "samples": cloud.samples.len(),
        "rejected": cloud.rejected,
        "coverage": coverage,
    }));
    ExitCode::SUCCESS
}

fn fk(dims: Dims, t1: f64, t2: f64, t3: f64) -> ExitCode {
    let req = FkRequest {
        ell: dims.ell,
        b: dims.b,
        theta1_deg: t1,
        theta2_deg: t2,
        theta3_deg: t3,
    };
    match api::fk(&req) {
        Ok(res) => {
            print_json(&res);
            if res.solutions.is_empty() {
                eprintln!("canfield: no configuration has these base angles");
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => api_failure(e),
    }
}

struct Row {
    case: String,
    expected: String,
    analytic: String,
    oracle: String,
}

fn describe_oracle(class: &OracleClass) -> String {
    match class {
        OracleClass::Finite(v) => v.len().to_string(),
        OracleClass::Continuum => "interval x circle".into(),
        OracleClass::FamilyOverSecond(v) => format!("{} x interval", v.len()),
        OracleClass::Loop(_) => "circle".into(),
    }
}

fn describe_preimage(class: &PreimageClass) -> String {
    match class {
        PreimageClass::Finite(v) => v.len().to_string(),
        PreimageClass::IntervalTimesCircle => "interval x circle".into(),
        PreimageClass::FiniteFamilyOverP(v) => format!("{} x interval", v.len()),
    }
}

fn oracle_rows(grid: usize) -> Result<Vec<Row>, Error> {
    let settings = OracleSettings {
        grid,
        ..OracleSettings::default()
    };
    let mut rows = Vec::new();
    for (target, expected) in [([1.0, 0.0], "1"), ([0.5, 0.0], "2"), ([0.0, 0.0], "circle")] {
        let analytic = match planar_fourbar_solve(target, DEFAULT_TOL)? {
            PlanarPreimage::Finite(v) => v.len().to_string(),
            PlanarPreimage::CircleFamily => "circle".into(),
        };
        rows.push(Row {
            case: format!("planar V2 at ({}, {})", target[0], target[1]),
            expected: expected.into(),
            analytic,
            oracle: describe_oracle(&planar_oracle(target, &settings)),
        });
    }

    let mut arm =
        |label: &str, params: &JointParams, h: Vec3, expected: &str| -> Result<(), Error> {
            rows.push(Row {
                case: label.into(),
                expected: expected.into(),
                analytic: describe_preimage(&inverse_arm(params, &h, DEFAULT_TOL)?),
                oracle: describe_oracle(&arm_preimage_oracle(params, &h, &settings)),
            });
            Ok(())
        };
    let p = JointParams::new(6.0, 4.0)?;
    let interior = forward_arm(&p, &ControlTriple::new(1.3, 1.5, 0.7), DEFAULT_TOL)?.distal_hinge;
    arm("arm interior, b=4 l=6", &p, interior, "2")?;
    let theta = boundary_theta(5.8, &p)?;
    let edge = forward_arm(&p, &ControlTriple::new(theta, 5.8, 1.0), DEFAULT_TOL)?.distal_hinge;
    arm("arm boundary circle, b=4 l=6 p=5.8", &p, edge, "1")?;
    arm(
        "arm at base hinge",
        &p,
        base_layout(&p).hinges[0],
        "interval x circle",
    )?;
    let rho = p.rho();
    let common = Vec3::new(rho * 1.0f64.cos(), rho * 1.0f64.sin(), 0.0);
    arm("arm on common circle", &p, common, "2 x interval")?;
    Ok(rows)
}

fn oracle(grid: usize) -> ExitCode {
    if grid < 100 {
        eprintln!("canfield: --grid must be at least 100");
        return ExitCode::from(EXIT_USAGE);
    }
    let rows = match oracle_rows(grid) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("canfield: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "{:<40} {:>18} {:>18} {:>18}  result",
        "case", "expected", "analytic", "oracle"
    );
    let mut all = true;
    for r in &rows {
        let ok = r.expected == r.analytic && r.analytic == r.oracle;
        all &= ok;
        let _ = writeln!(
            out,
            "{:<40} {:>18} {:>18} {:>18}  {}",
            r.case,
            r.expected,
            r.analytic,
            r.oracle,
            if ok { "pass" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

fn serve(listen: SocketAddr, cors_origin: Option<String>) -> ExitCode {
    if let Some(origin) = &cors_origin {
        if origin_is_invalid(origin) {
            eprintln!("canfield: invalid --cors-origin {origin:?}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let runtime = match tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
    {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("canfield: {e}");
            return ExitCode::FAILURE;
        }
    };
    let config = ServiceConfig {
        cors_origin,
        ..ServiceConfig::default()
    };
    eprintln!("canfield: listening on http://{listen}");
    match runtime.block_on(canfield_service::serve(listen, config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("canfield: {listen}: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn origin_is_invalid(origin: &str) -> bool {
    !(origin.starts_with("http://") || origin.starts_with("https://"))
        || origin.chars().any(|c| c.is_whitespace() || c.is_control())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Solve {
            dims,
            theta_deg,
            p,
            phi_deg,
            branch,
        } => solve(dims, wrap_deg(theta_deg), p, phi_deg, branch),
        Command::Sweep {
            dims,
            theta_deg,
            p_samples,
            phi_samples,
            format,
            out,
            bins,
            branch,
        } => sweep(
            dims,
            wrap_deg(theta_deg),
            p_samples,
            phi_samples,
            format,
            out,
            bins,
            branch,
        ),
        Command::Fk {
            dims,
            theta1_deg,
            theta2_deg,
            theta3_deg,
        } => fk(dims, theta1_deg, theta2_deg, theta3_deg),
        Command::Oracle { grid } => oracle(grid),
        Command::Serve {
            listen,
            cors_origin,
        } => serve(listen, cors_origin),
    }
}

/// Base angles may be given in any turn; they are reduced to [0, 360).
fn wrap_deg(deg: f64) -> f64 {
    if deg.is_finite() {
        wrap_tau(deg.to_radians()).to_degrees()
    } else {
        deg
    }
}
