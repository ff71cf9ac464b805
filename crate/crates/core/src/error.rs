use std::path::PathBuf;

use thiserror::Error;

use crate::full_joint::ArmDiagnostic;
use crate::joint_model::Regime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid joint parameters: {0}")]
    InvalidParams(String),

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("operation requires the {expected:?} regime but the joint is in {found:?}")]
    WrongRegime { expected: Regime, found: Regime },

    #[error("points coincide within tolerance")]
    CoincidentPoints,

    #[error("circle lies in the intersecting plane")]
    CircleInPlane,

    #[error("circles coincide")]
    CoincidentCircles,

    #[error("zero-length direction vector")]
    DegenerateVector,

    #[error("base angle {theta} exceeds the single-arm bound {theta_max}")]
    NoIntersection { theta: f64, theta_max: f64 },

    #[error("spheres coincide; phi cannot select a point, use the two-angle selector")]
    AmbiguousSphere,

    #[error("phi = {0} is outside (-pi, pi)")]
    PhiOutOfRange(f64),

    #[error("intersection collapses to the base hinge; phi must be 0, got {0}")]
    PhiAtPointIntersection(f64),

    #[error("point is {residual:e} away from the intersection circle")]
    NotOnCircle { residual: f64 },

    #[error("target is unreachable: {0}")]
    Unreachable(String),

    #[error("target requires plunge distance {p}, outside [0, ell]")]
    OutOfWorkspace { p: f64 },

    #[error("distal hinge coincides with base hinge; the mirror plane is undetermined")]
    DegenerateFold,

    #[error("joint cannot be assembled: {}", describe_arms(.diagnostics))]
    InvalidConfiguration { diagnostics: Vec<ArmDiagnostic> },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("no configuration matches the requested base angles")]
    NoSolution,

    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error("sweep produced no valid configurations")]
    EmptyWorkspace,

    #[error("cannot estimate coverage of an empty cloud")]
    EmptyCloud,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

fn describe_arms(diagnostics: &[ArmDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
