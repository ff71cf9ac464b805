//! Request and response documents and the pure handlers behind each route.

use canfield_core::full_joint::{
    reconstruct, solve_fk, ArmDiagnostic, BranchId, Configuration, FkSettings,
};
use canfield_core::geometry::{Vec3, DEFAULT_TOL};
use canfield_core::joint_model::{
    d_bounds, d_of, p_bounds, regime, theta_max, wrap_tau, JointParams, Regime,
};
use canfield_core::single_arm::ControlTriple;
use canfield_core::workspace::{
    solid_angle_fraction, sweep_broken_arm, BranchPolicy, Coverage, SweepSpec,
};
use canfield_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub enum ApiError {
    BadRequest {
        field: Option<&'static str>,
        message: String,
    },
    TooLarge(String),
    Internal(String),
}

impl ApiError {
    fn field(field: &'static str, message: impl Into<String>) -> Self {
        ApiError::BadRequest {
            field: Some(field),
            message: message.into(),
        }
    }

    pub fn body(&self) -> serde_json::Value {
        match self {
            ApiError::BadRequest { field, message } => json!({ "error": message, "field": field }),
            ApiError::TooLarge(message) | ApiError::Internal(message) => {
                json!({ "error": message })
            }
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ApiError::BadRequest {
                field: Some(field),
                message,
            } => write!(f, "{field}: {message}"),
            ApiError::BadRequest {
                field: None,
                message,
            }
            | ApiError::TooLarge(message)
            | ApiError::Internal(message) => f.write_str(message),
        }
    }
}

fn params(ell: f64, b: f64) -> Result<JointParams, ApiError> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(ApiError::field(
            "ell",
            format!("must be positive, got {ell}"),
        ));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(ApiError::field("b", format!("must be positive, got {b}")));
    }
    JointParams::new(ell, b).map_err(|e| ApiError::field("ell", e.to_string()))
}

fn check_p(p: f64, params: &JointParams) -> Result<(), ApiError> {
    let (lo, hi) = p_bounds(params);
    if !(p.is_finite() && p >= lo && p <= hi) {
        return Err(ApiError::field(
            "p",
            format!("must lie in [{lo}, {hi}], got {p}"),
        ));
    }
    Ok(())
}

fn check_deg(
    field: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    open_lo: bool,
) -> Result<(), ApiError> {
    let above = if open_lo { value > lo } else { value >= lo };
    if !(value.is_finite() && above && value < hi) {
        let open = if open_lo { "(" } else { "[" };
        return Err(ApiError::field(
            field,
            format!("must lie in {open}{lo}, {hi}), got {value}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub p_bounds: [f64; 2],
    pub d_bounds: [f64; 2],
    pub d: f64,
    pub theta_max_deg: f64,
    pub regime: Regime,
}

fn bounds_at(params: &JointParams, p: f64) -> Result<Bounds, ApiError> {
    check_p(p, params)?;
    let internal = |e: Error| ApiError::Internal(e.to_string());
    let (plo, phi) = p_bounds(params);
    let (dlo, dhi) = d_bounds(params);
    Ok(Bounds {
        p_bounds: [plo, phi],
        d_bounds: [dlo, dhi],
        d: d_of(p, params).map_err(internal)?,
        theta_max_deg: theta_max(p, params).map_err(internal)?.to_degrees(),
        regime: regime(p, params, DEFAULT_TOL).map_err(internal)?,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsQuery {
    pub ell: f64,
    pub b: f64,
    pub p: f64,
}

pub fn bounds(q: &BoundsQuery) -> Result<Bounds, ApiError> {
    bounds_at(&params(q.ell, q.b)?, q.p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub ell: f64,
    pub b: f64,
    pub theta_deg: f64,
    pub p: f64,
    pub phi_deg: f64,
    #[serde(default)]
    pub branch: Option<BranchId>,
}

/// A configuration with its base angles repeated in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationView {
    pub thetas_deg: [f64; 3],
    #[serde(flatten)]
    pub configuration: Configuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub valid: bool,
    pub configurations: Vec<ConfigurationView>,
    pub failures: Vec<ArmDiagnostic>,
    /// Why nothing assembled, when it did not.
    pub reason: Option<String>,
    pub bounds: Bounds,
}

pub fn solve(req: &SolveRequest) -> Result<SolveResponse, ApiError> {
    let params = params(req.ell, req.b)?;
    check_p(req.p, &params)?;
    check_deg("theta_deg", req.theta_deg, 0.0, 360.0, false)?;
    check_deg("phi_deg", req.phi_deg, -180.0, 180.0, true)?;
    let bounds = bounds_at(&params, req.p)?;
    let ctrl = ControlTriple::from_degrees(req.theta_deg, req.p, req.phi_deg);
    let (configurations, failures, reason) = match reconstruct(&params, &ctrl, DEFAULT_TOL) {
        Ok(report) => {
            let configs: Vec<ConfigurationView> = report
                .configurations
                .into_iter()
                .filter(|c| req.branch.is_none_or(|b| b == c.branch))
                .map(|configuration| ConfigurationView {
                    thetas_deg: configuration.thetas.map(f64::to_degrees),
                    configuration,
                })
                .collect();
            let reason = configs
                .is_empty()
                .then(|| "requested branch does not exist for this control".to_string());
            (configs, report.diagnostics, reason)
        }
        Err(Error::InvalidConfiguration { diagnostics }) => {
            let reason = diagnostics
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            (Vec::new(), diagnostics, Some(reason))
        }
        Err(
            e @ (Error::NoIntersection { .. }
            | Error::DegenerateFold
            | Error::AmbiguousSphere
            | Error::PhiAtPointIntersection(_)),
        ) => (Vec::new(), Vec::new(), Some(e.to_string())),
        Err(e) => return Err(ApiError::Internal(e.to_string())),
    };
    Ok(SolveResponse {
        valid: !configurations.is_empty(),
        configurations,
        failures,
        reason,
        bounds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub ell: f64,
    pub b: f64,
    pub theta_deg: f64,
    pub p_samples: usize,
    pub phi_samples: usize,
    #[serde(default)]
    pub p_range: Option<[f64; 2]>,
    #[serde(default)]
    pub phi_range_deg: Option<[f64; 2]>,
    #[serde(default)]
    pub branch: Option<BranchPolicy>,
    #[serde(default)]
    pub bins: Option<usize>,
}

pub const DEFAULT_BINS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleView {
    pub p: f64,
    pub phi_deg: f64,
    pub branch: BranchId,
    pub distal_center: Vec3,
    pub pointing: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResponse {
    pub params: JointParams,
    pub theta_deg: f64,
    pub p_samples: usize,
    pub phi_samples: usize,
    pub branch: BranchPolicy,
    pub samples: Vec<SampleView>,
    pub rejected: usize,
    pub coverage: Option<Coverage>,
}

pub fn sweep(req: &SweepRequest, cap: usize) -> Result<SweepResponse, ApiError> {
    if req.p_samples > cap || req.phi_samples > cap {
        return Err(ApiError::TooLarge(format!(
            "grid {}x{} exceeds the {cap}x{cap} limit",
            req.p_samples, req.phi_samples
        )));
    }
    let params = params(req.ell, req.b)?;
    check_deg("theta_deg", req.theta_deg, 0.0, 360.0, false)?;
    let bins = req.bins.unwrap_or(DEFAULT_BINS);
    if !(100..=1_000_000).contains(&bins) {
        return Err(ApiError::field(
            "bins",
            format!("must lie in [100, 1000000], got {bins}"),
        ));
    }
    let spec = SweepSpec {
        theta_fixed: wrap_tau(req.theta_deg.to_radians()),
        p_samples: req.p_samples,
        phi_samples: req.phi_samples,
        p_range: req.p_range.map(|[a, b]| (a, b)),
        phi_range: req
            .phi_range_deg
            .map(|[a, b]| (a.to_radians(), b.to_radians())),
        branch_policy: req.branch.unwrap_or(BranchPolicy::AllBranches),
    };
    spec.validate(&params).map_err(|e| {
        let field = if req.p_samples < 2 {
            "p_samples"
        } else if req.phi_samples < 2 {
            "phi_samples"
        } else if req.p_range.is_some()
            && matches!(&e, Error::InvalidSpec(m) if m.starts_with("p range"))
        {
            "p_range"
        } else {
            "phi_range_deg"
        };
        ApiError::field(field, e.to_string())
    })?;
    let cloud = sweep_broken_arm(&params, &spec, DEFAULT_TOL)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let coverage = if cloud.is_empty() {
        None
    } else {
        Some(solid_angle_fraction(&cloud, bins).map_err(|e| ApiError::Internal(e.to_string()))?)
    };
    Ok(SweepResponse {
        params,
        theta_deg: req.theta_deg,
        p_samples: req.p_samples,
        phi_samples: req.phi_samples,
        branch: spec.branch_policy,
        samples: cloud
            .samples
            .iter()
            .map(|s| SampleView {
                p: s.control.p,
                phi_deg: s.control.phi.to_degrees(),
                branch: s.branch,
                distal_center: s.distal_center,
                pointing: s.pointing,
            })
            .collect(),
        rejected: cloud.rejected,
        coverage,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkRequest {
    pub ell: f64,
    pub b: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub theta3_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkSolutionView {
    pub p: f64,
    pub phi_deg: f64,
    pub branch: BranchId,
    pub thetas_deg: [f64; 3],
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkResponse {
    pub solutions: Vec<FkSolutionView>,
    pub degenerate_fold: bool,
}

pub fn fk(req: &FkRequest) -> Result<FkResponse, ApiError> {
    let params = params(req.ell, req.b)?;
    let mut targets = [0.0; 3];
    for (k, (field, deg)) in [
        ("theta1_deg", req.theta1_deg),
        ("theta2_deg", req.theta2_deg),
        ("theta3_deg", req.theta3_deg),
    ]
    .into_iter()
    .enumerate()
    {
        if !deg.is_finite() {
            return Err(ApiError::field(field, "must be finite"));
        }
        targets[k] = wrap_tau(deg.to_radians());
    }
    match solve_fk(&params, targets, &FkSettings::default()) {
        Ok(report) => Ok(FkResponse {
            solutions: report
                .solutions
                .iter()
                .map(|s| FkSolutionView {
                    p: s.control.p,
                    phi_deg: s.control.phi.to_degrees(),
                    branch: s.branch,
                    thetas_deg: s.configuration.thetas.map(f64::to_degrees),
                    residual: s.residual,
                })
                .collect(),
            degenerate_fold: report.degenerate_fold,
        }),
        Err(Error::NoSolution) => Ok(FkResponse {
            solutions: Vec::new(),
            degenerate_fold: false,
        }),
        Err(e) => Err(ApiError::Internal(e.to_string())),
    }
}
