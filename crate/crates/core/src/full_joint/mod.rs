//! The whole joint: reconstruction from `(θ₁, p, φ)`, branch enumeration,
//! invariant checks and the bridge to the three base angles.
//!
//! The distal plate is the mirror image of the base plate across the
//! perpendicular bisector M of B₁ and H₁. The Center lies on M, the ball
//! joints are the fixed points of the reflection, and each remaining ball
//! joint is where its hinge circle crosses M.

mod fk;

pub use fk::{solve_fk, FkReport, FkSettings, FkSolution};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    circle_plane_intersect, perp_bisector_plane, reflect_point, Circle3, Plane, Vec3,
};
use crate::joint_model::{base_layout, d_of, BaseLayout, JointParams};
use crate::single_arm::{forward_arm, ControlTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn letter(self) -> char {
        match self {
            Sign::Plus => 'P',
            Sign::Minus => 'M',
        }
    }
}

/// Which candidate ball joint arms 2 and 3 take. Plus is the candidate with
/// the greater z (then y, then x).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchId {
    pub s2: Sign,
    pub s3: Sign,
}

impl BranchId {
    pub const ALL: [BranchId; 4] = [
        BranchId::new(Sign::Plus, Sign::Plus),
        BranchId::new(Sign::Plus, Sign::Minus),
        BranchId::new(Sign::Minus, Sign::Plus),
        BranchId::new(Sign::Minus, Sign::Minus),
    ];

    pub const fn new(s2: Sign, s3: Sign) -> Self {
        Self { s2, s3 }
    }

    pub fn label(self) -> String {
        [self.s2.letter(), self.s3.letter()].iter().collect()
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for BranchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sign = |c| match c {
            'P' | 'p' | '+' => Ok(Sign::Plus),
            'M' | 'm' | '-' => Ok(Sign::Minus),
            _ => Err(Error::Parse(format!(
                "bad branch {s:?}, expected one of PP, PM, MP, MM"
            ))),
        };
        let mut chars = s.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => Ok(BranchId::new(sign(a)?, sign(b)?)),
            _ => Err(Error::Parse(format!(
                "bad branch {s:?}, expected one of PP, PM, MP, MM"
            ))),
        }
    }
}

impl Serialize for BranchId {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for BranchId {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A fully assembled joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub params: JointParams,
    pub control: ControlTriple,
    pub branch: BranchId,
    pub base: BaseLayout,
    pub ball_joints: [Vec3; 3],
    pub distal_hinges: [Vec3; 3],
    pub distal_center: Vec3,
    /// Unit normal of the distal plate, pointing away from the Center.
    pub distal_normal: Vec3,
    pub joint_center: Vec3,
    pub p: f64,
    pub thetas: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmStatus {
    NoIntersection,
    Tangent,
    TwoPoints,
}

/// How the hinge circle of one remaining arm meets the mirror plane.
///
/// `gap` is the in-plane distance from the circle to the line where its plane
/// crosses M: positive when they miss, negative when they cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmDiagnostic {
    pub arm: usize,
    pub status: ArmStatus,
    pub gap: f64,
}

impl fmt::Display for ArmDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status {
            ArmStatus::NoIntersection => write!(
                f,
                "arm {}: ball-joint circle misses the mirror plane by {:.6}",
                self.arm, self.gap
            ),
            ArmStatus::Tangent => write!(
                f,
                "arm {}: ball-joint circle touches the mirror plane",
                self.arm
            ),
            ArmStatus::TwoPoints => write!(f, "arm {}: two ball-joint positions", self.arm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub configurations: Vec<Configuration>,
    pub diagnostics: Vec<ArmDiagnostic>,
}

impl ReconstructionReport {
    pub fn branch(&self, id: BranchId) -> Option<&Configuration> {
        self.configurations.iter().find(|c| c.branch == id)
    }
}

/// Perpendicular bisector of the base and distal hinges of arm 1.
pub fn mirror_plane(b1: &Vec3, h1: &Vec3, tol: f64) -> Result<Plane> {
    perp_bisector_plane(b1, h1, tol).map_err(|e| match e {
        Error::CoincidentPoints => Error::DegenerateFold,
        other => other,
    })
}

fn plus_first(a: &Vec3, b: &Vec3, tol: f64) -> std::cmp::Ordering {
    let key = |u: f64, v: f64| {
        if (u - v).abs() <= tol {
            None
        } else {
            Some(v.total_cmp(&u))
        }
    };
    key(a.z, b.z)
        .or_else(|| key(a.y, b.y))
        .unwrap_or_else(|| b.x.total_cmp(&a.x))
}

fn miss_gap(circle: &Circle3, plane: &Plane) -> f64 {
    let slope = plane.normal.reject_from(&circle.axis).norm();
    if slope == 0.0 {
        return f64::INFINITY;
    }
    (plane.signed_distance(&circle.center) / slope).abs() - circle.radius
}

/// Assembles every branch of the joint for the given control triple.
pub fn reconstruct(
    params: &JointParams,
    ctrl: &ControlTriple,
    tol: f64,
) -> Result<ReconstructionReport> {
    let arm1 = forward_arm(params, ctrl, tol)?;
    let base = base_layout(params);
    let h1 = arm1.distal_hinge;
    let mirror = mirror_plane(&base.hinges[0], &h1, tol)?;
    let center = Vec3::new(0.0, 0.0, ctrl.p);
    let offset = mirror.signed_distance(&center);
    if offset.abs() > tol {
        return Err(Error::Invariant(format!(
            "Center is {offset:e} off the mirror plane"
        )));
    }
    // Anchor M at the Center rather than the hinge midpoint: when M is nearly
    // vertical its height on the z axis is poorly fixed by the midpoint, and
    // the plunge read back from the plate would drift.
    let mirror = Plane {
        point: center,
        normal: mirror.normal,
    };

    let distal_hinges = [
        h1,
        reflect_point(&mirror, &base.hinges[1]),
        reflect_point(&mirror, &base.hinges[2]),
    ];
    let distal_center = reflect_point(&mirror, &base.center);
    let distal_normal = mirror.reflect_vector(&-base.normal);

    let mut candidates: [Vec<Vec3>; 2] = [Vec::new(), Vec::new()];
    let mut diagnostics = Vec::with_capacity(2);
    for i in 1..3 {
        let circle = Circle3 {
            center: base.hinges[i],
            radius: params.ell,
            axis: base.hinge_axes[i],
        };
        let mut points = match circle_plane_intersect(&circle, &mirror, tol) {
            Ok(points) => points,
            Err(Error::CircleInPlane) => {
                return Err(Error::Invariant(format!(
                    "hinge circle of arm {} lies in the mirror plane",
                    i + 1
                )))
            }
            Err(e) => return Err(e),
        };
        for q in &points {
            let bar = q.distance(&distal_hinges[i]) - params.ell;
            if bar.abs() > tol {
                return Err(Error::Invariant(format!(
                    "arm {} ball joint misses its distal bar length by {bar:e}",
                    i + 1
                )));
            }
        }
        points.sort_by(|a, b| plus_first(a, b, tol));
        let status = match points.len() {
            0 => ArmStatus::NoIntersection,
            1 => ArmStatus::Tangent,
            _ => ArmStatus::TwoPoints,
        };
        diagnostics.push(ArmDiagnostic {
            arm: i + 1,
            status,
            gap: miss_gap(&circle, &mirror),
        });
        candidates[i - 1] = points;
    }
    if diagnostics
        .iter()
        .any(|d| d.status == ArmStatus::NoIntersection)
    {
        return Err(Error::InvalidConfiguration { diagnostics });
    }

    let signs = [Sign::Plus, Sign::Minus];
    let mut configurations = Vec::with_capacity(4);
    for (k2, q2) in candidates[0].iter().enumerate() {
        for (k3, q3) in candidates[1].iter().enumerate() {
            let ball_joints = [arm1.ball_joint, *q2, *q3];
            let thetas = [ctrl.theta, base.theta_of(1, q2), base.theta_of(2, q3)];
            configurations.push(Configuration {
                params: *params,
                control: *ctrl,
                branch: BranchId::new(signs[k2], signs[k3]),
                base,
                ball_joints,
                distal_hinges,
                distal_center,
                distal_normal,
                joint_center: center,
                p: ctrl.p,
                thetas,
            });
        }
    }
    Ok(ReconstructionReport {
        configurations,
        diagnostics,
    })
}

pub fn thetas_of(config: &Configuration) -> [f64; 3] {
    config.thetas
}

pub fn pointing(config: &Configuration) -> Vec3 {
    config.distal_normal
}

/// A construction identity that fails to hold, with its residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub identity: String,
    pub residual: f64,
}

/// Checks every construction identity of `config` within `tol`.
pub fn validate(config: &Configuration, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |identity: String, residual: f64| {
        if residual.is_nan() || residual.abs() > tol {
            out.push(Violation { identity, residual });
        }
    };
    let ell = config.params.ell;
    let b = config.params.b;
    let base = &config.base;
    let c = config.joint_center;
    let d = d_of(config.p, &config.params).unwrap_or(f64::NAN);
    for i in 0..3 {
        let n = i + 1;
        check(
            format!("|ball{n} - base{n}| = ell"),
            config.ball_joints[i].distance(&base.hinges[i]) - ell,
        );
        check(
            format!("|ball{n} - distal{n}| = ell"),
            config.ball_joints[i].distance(&config.distal_hinges[i]) - ell,
        );
        check(
            format!("|distal{n} - center| = d"),
            config.distal_hinges[i].distance(&c) - d,
        );
        check(
            format!("ball{n} in rotation plane {n}"),
            base.rotation_planes[i].signed_distance(&config.ball_joints[i]),
        );
        let theta = base.theta_of(i, &config.ball_joints[i]);
        let dtheta = crate::joint_model::wrap_pi(theta - config.thetas[i]);
        check(format!("theta{n} matches ball{n}"), dtheta);
    }
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        check(
            format!("|distal{} - distal{}| = b", i + 1, j + 1),
            config.distal_hinges[i].distance(&config.distal_hinges[j]) - b,
        );
    }
    check(
        "|distal center - center| = p".into(),
        config.distal_center.distance(&c) - config.p,
    );
    check(
        "|base center - center| = p".into(),
        base.center.distance(&c) - config.p,
    );
    check(
        "center at (0, 0, p)".into(),
        c.distance(&Vec3::new(0.0, 0.0, config.p)),
    );
    check(
        "|distal normal| = 1".into(),
        config.distal_normal.norm() - 1.0,
    );
    check(
        "distal normal perpendicular to distal plate".into(),
        config
            .distal_normal
            .dot(&(config.distal_hinges[0] - config.distal_center)),
    );

    // Mirror symmetry; vacuous when the plates coincide.
    let pairs = (0..3)
        .map(|i| (base.hinges[i], config.distal_hinges[i]))
        .collect::<Vec<_>>();
    if let Some((bk, hk)) = pairs.iter().find(|(bk, hk)| bk.distance(hk) > tol) {
        if let Ok(mirror) = perp_bisector_plane(bk, hk, tol) {
            for i in 0..3 {
                check(
                    format!("ball{} on mirror plane", i + 1),
                    mirror.signed_distance(&config.ball_joints[i]),
                );
                check(
                    format!("distal{} mirrors base{}", i + 1, i + 1),
                    reflect_point(&mirror, &base.hinges[i]).distance(&config.distal_hinges[i]),
                );
            }
            check("center on mirror plane".into(), mirror.signed_distance(&c));
            check(
                "distal center mirrors base center".into(),
                reflect_point(&mirror, &base.center).distance(&config.distal_center),
            );
        }
    } else {
        check(
            "distal center = base center".into(),
            config.distal_center.distance(&base.center),
        );
    }
    out
}

/// A fixed-plunge path that stopped at an invalid step.
#[derive(Debug)]
pub struct PathBroken {
    /// Configurations of the steps before the failure.
    pub prefix: Vec<Configuration>,
    pub step: usize,
    pub cause: Error,
}

impl fmt::Display for PathBroken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "path broken at step {}: {}", self.step, self.cause)
    }
}

impl std::error::Error for PathBroken {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.cause)
    }
}

/// Moves φ from `phi_from` to `phi_to` in `steps` evenly spaced configurations
/// while θ and p stay fixed, following `branch`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_plunge_path(
    params: &JointParams,
    theta: f64,
    p: f64,
    phi_from: f64,
    phi_to: f64,
    steps: usize,
    branch: BranchId,
    tol: f64,
) -> std::result::Result<Vec<Configuration>, PathBroken> {
    let mut prefix = Vec::with_capacity(steps);
    for step in 0..steps {
        let phi = if steps == 1 {
            phi_from
        } else {
            phi_from + (phi_to - phi_from) * step as f64 / (steps - 1) as f64
        };
        let result =
            reconstruct(params, &ControlTriple::new(theta, p, phi), tol).and_then(|report| {
                report
                    .branch(branch)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfiguration {
                        diagnostics: report.diagnostics.clone(),
                    })
            });
        match result {
            Ok(config) => prefix.push(config),
            Err(cause) => {
                return Err(PathBroken {
                    prefix,
                    step,
                    cause,
                })
            }
        }
    }
    Ok(prefix)
}
