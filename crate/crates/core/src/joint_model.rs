//! Physical parameters of the joint, the canonical base-plate layout, the
//! plunge/hinge-distance bounds and the regime classification.
//!
//! The base plate is posed canonically: center at the origin, plate in the
//! `z = 0` plane, normal `+z`, hinge 1 on the `+x` axis and hinges 2 and 3 at
//! 120° and 240° about `+z`. A base angle θ is measured in the hinge's
//! rotation plane from the inward direction (hinge toward plate center)
//! toward `+z`, wrapped to `[0, 2π)`; θ = π is the flat, outward-pointing arm.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Plane, Vec3, DEFAULT_TOL};

/// Fixed measurements of a joint: half-arm length `ell` and hinge spacing `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawParams")]
pub struct JointParams {
    pub ell: f64,
    pub b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    ell: f64,
    b: f64,
}

impl TryFrom<RawParams> for JointParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        JointParams::new(raw.ell, raw.b)
    }
}

impl JointParams {
    pub fn new(ell: f64, b: f64) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::InvalidParams(format!(
                "ell must be positive, got {ell}"
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParams(format!("b must be positive, got {b}")));
        }
        Ok(Self { ell, b })
    }

    /// Circumradius of the hinge triangle, `b / √3`.
    pub fn rho(&self) -> f64 {
        self.b / 3f64.sqrt()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Geometry of the fixed base plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseLayout {
    pub hinges: [Vec3; 3],
    pub hinge_axes: [Vec3; 3],
    pub rotation_planes: [Plane; 3],
    pub center: Vec3,
    pub normal: Vec3,
}

impl BaseLayout {
    /// Unit vector from hinge `arm` toward the plate center.
    pub fn inward(&self, arm: usize) -> Vec3 {
        let radial = self.center - self.hinges[arm];
        radial / radial.norm()
    }

    /// Ball-joint position of `arm` at base angle `theta`.
    pub fn ball_joint(&self, arm: usize, ell: f64, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        self.hinges[arm] + (self.inward(arm) * c + self.normal * s) * ell
    }

    /// Base angle of `arm` whose first bar points at `q`.
    pub fn theta_of(&self, arm: usize, q: &Vec3) -> f64 {
        let v = *q - self.hinges[arm];
        wrap_tau(v.dot(&self.normal).atan2(v.dot(&self.inward(arm))))
    }
}

pub fn base_layout(params: &JointParams) -> BaseLayout {
    let rho = params.rho();
    let mut hinges = [Vec3::ZERO; 3];
    let mut hinge_axes = [Vec3::ZERO; 3];
    let mut rotation_planes = [Plane {
        point: Vec3::ZERO,
        normal: Vec3::Y,
    }; 3];
    for i in 0..3 {
        let angle = TAU * i as f64 / 3.0;
        let (s, c) = angle.sin_cos();
        hinges[i] = Vec3::new(rho * c, rho * s, 0.0);
        // Tangent to the circumscribed circle: z x radial.
        hinge_axes[i] = Vec3::new(-s, c, 0.0);
        rotation_planes[i] = Plane {
            point: hinges[i],
            normal: hinge_axes[i],
        };
    }
    // The layout is exact for hinge 1; pin it so B1 = (rho, 0, 0) bit for bit.
    hinges[0] = Vec3::new(rho, 0.0, 0.0);
    BaseLayout {
        hinges,
        hinge_axes,
        rotation_planes,
        center: Vec3::ZERO,
        normal: Vec3::Z,
    }
}

/// Wraps an angle to `[0, 2π)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = wrap_tau(angle);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

pub fn p_bounds(params: &JointParams) -> (f64, f64) {
    (0.0, params.ell)
}

pub fn d_bounds(params: &JointParams) -> (f64, f64) {
    let rho = params.rho();
    (rho, params.ell.hypot(rho))
}

fn check_p(p: f64, params: &JointParams) -> Result<f64> {
    let (lo, hi) = p_bounds(params);
    if !p.is_finite() || p < lo - DEFAULT_TOL || p > hi + DEFAULT_TOL {
        return Err(Error::OutOfRange {
            what: "p",
            value: p,
            lo,
            hi,
        });
    }
    Ok(p.clamp(lo, hi))
}

/// Distance from the joint Center to any hinge, `√(p² + b²/3)`.
pub fn d_of(p: f64, params: &JointParams) -> Result<f64> {
    let p = check_p(p, params)?;
    Ok(p.hypot(params.rho()))
}

/// Largest base angle for which the single-arm spheres still meet: `π + asin(p/d)`.
pub fn theta_max(p: f64, params: &JointParams) -> Result<f64> {
    let d = d_of(p, params)?;
    let p = check_p(p, params)?;
    Ok(PI + (p / d).asin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    DLessL,
    DEqualL,
    DGreaterL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamClass {
    RhoLessL,
    RhoEqualL,
    RhoGreaterL,
}

fn classify(value: f64, ell: f64, tol: f64) -> std::cmp::Ordering {
    if (value - ell).abs() <= tol {
        std::cmp::Ordering::Equal
    } else if value < ell {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

pub fn regime(p: f64, params: &JointParams, tol: f64) -> Result<Regime> {
    let d = d_of(p, params)?;
    Ok(match classify(d, params.ell, tol) {
        std::cmp::Ordering::Less => Regime::DLessL,
        std::cmp::Ordering::Equal => Regime::DEqualL,
        std::cmp::Ordering::Greater => Regime::DGreaterL,
    })
}

pub fn param_class(params: &JointParams, tol: f64) -> ParamClass {
    match classify(params.rho(), params.ell, tol) {
        std::cmp::Ordering::Less => ParamClass::RhoLessL,
        std::cmp::Ordering::Equal => ParamClass::RhoEqualL,
        std::cmp::Ordering::Greater => ParamClass::RhoGreaterL,
    }
}

/// Base angle at which the single-arm intersection circle lies on the
/// boundary of the two-bar workspace: `acos(b/(d√3)) + acos(ℓ/d)`.
///
/// Only defined when `d ≥ ℓ`.
pub fn boundary_theta(p: f64, params: &JointParams) -> Result<f64> {
    let d = d_of(p, params)?;
    if d < params.ell - DEFAULT_TOL {
        return Err(Error::WrongRegime {
            expected: Regime::DGreaterL,
            found: Regime::DLessL,
        });
    }
    let a = (params.rho() / d).min(1.0).acos();
    let b = (params.ell / d).min(1.0).acos();
    Ok(a + b)
}

/// Base angle at which the two single-arm spheres coincide, `asin(p/d)`.
///
/// Only defined when `d = ℓ`.
pub fn coincident_theta(p: f64, params: &JointParams) -> Result<f64> {
    let found = regime(p, params, DEFAULT_TOL)?;
    if found != Regime::DEqualL {
        return Err(Error::WrongRegime {
            expected: Regime::DEqualL,
            found,
        });
    }
    let p = check_p(p, params)?;
    let d = d_of(p, params)?;
    Ok((p / d).min(1.0).asin())
}
