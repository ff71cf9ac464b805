//! The single-arm 4-bar: base hinge, ball joint, distal hinge and the joint
//! Center, controlled by `(θ, p, φ)`.
//!
//! Fixing θ puts the distal hinge on a sphere of radius ℓ about the ball joint;
//! fixing p puts it on a sphere of radius d about the Center `(0, 0, p)`. Both
//! spheres always contain the base hinge B₁, so they meet in a circle through
//! B₁, in the point B₁ itself, or coincide. φ locates the distal hinge on that
//! circle: φ = 0 is the point diametrically opposite B₁ and φ turns
//! right-handedly about the axis from the ball joint toward the Center. φ = ±π
//! is B₁ itself and is excluded.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    circle_sphere_intersect, sphere_sphere_intersect, Circle3, IntersectionResult, Sphere, Vec3,
};
use crate::joint_model::{
    base_layout, d_of, p_bounds, regime, theta_max, wrap_pi, JointParams, Regime,
};

/// Alternate control coordinates: base angle θ, plunge p, circle angle φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlTriple {
    pub theta: f64,
    pub p: f64,
    pub phi: f64,
}

impl ControlTriple {
    pub fn new(theta: f64, p: f64, phi: f64) -> Self {
        Self { theta, p, phi }
    }

    pub fn from_degrees(theta_deg: f64, p: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), p, phi_deg.to_radians())
    }

    /// Checks every bound the single arm imposes on the triple.
    pub fn validate(&self, params: &JointParams, tol: f64) -> Result<()> {
        let (lo, hi) = p_bounds(params);
        if !self.p.is_finite() || self.p < lo - tol || self.p > hi + tol {
            return Err(Error::OutOfRange {
                what: "p",
                value: self.p,
                lo,
                hi,
            });
        }
        if !self.theta.is_finite() || self.theta < 0.0 || self.theta >= TAU {
            return Err(Error::OutOfRange {
                what: "theta",
                value: self.theta,
                lo: 0.0,
                hi: TAU,
            });
        }
        if !self.phi.is_finite() || self.phi.abs() >= PI {
            return Err(Error::PhiOutOfRange(self.phi));
        }
        let max = theta_max(self.p, params)?;
        if self.theta > max + tol {
            return Err(Error::NoIntersection {
                theta: self.theta,
                theta_max: max,
            });
        }
        Ok(())
    }
}

/// One solution of the single arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSolution {
    pub theta: f64,
    pub p: f64,
    pub phi: f64,
    pub ball_joint: Vec3,
    pub distal_hinge: Vec3,
    /// Whether θ respects the single-arm bound `θ ≤ π + asin(p/d)`.
    pub within_bounds: bool,
    /// Set when the two spheres coincide; φ is then meaningless (reported as
    /// 0) and the distal hinge is located by `(ψ₁, ψ₂)` of
    /// [`coincident_selector`].
    pub sphere_angles: Option<(f64, f64)>,
}

/// Parameter range of a common-circle preimage family: the base angle reaches
/// the target for every `p` in `[p_lo, p_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaFamily {
    pub theta: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    /// Smallest plunge in the range at which θ also respects the single-arm
    /// bound; `None` if it never does.
    pub bounded_from: Option<f64>,
}

/// Preimage of a distal-hinge position under the single-arm map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PreimageClass {
    /// One or two isolated configurations.
    Finite(Vec<ArmSolution>),
    /// The base hinge itself: every θ together with every p.
    IntervalTimesCircle,
    /// A point of the base-plane common circle other than B₁: finitely many
    /// base angles, each valid over an interval of plunge distances.
    FiniteFamilyOverP(Vec<ThetaFamily>),
}

impl PreimageClass {
    /// Number of isolated solutions, `None` for continuous families.
    pub fn finite_count(&self) -> Option<usize> {
        match self {
            PreimageClass::Finite(s) => Some(s.len()),
            _ => None,
        }
    }
}

pub fn ball_joint_position(params: &JointParams, theta: f64) -> Vec3 {
    base_layout(params).ball_joint(0, params.ell, theta)
}

fn center_of(p: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, p)
}

/// The two spheres of the single arm, without the single-arm angle bound.
fn raw_intersection(
    params: &JointParams,
    theta: f64,
    p: f64,
    tol: f64,
) -> Result<IntersectionResult> {
    let d = d_of(p, params)?;
    let ball = ball_joint_position(params, theta);
    Ok(sphere_sphere_intersect(
        &Sphere::new(ball, params.ell),
        &Sphere::new(center_of(p), d),
        tol,
    ))
}

/// Sphere–sphere intersection for fixed `(θ, p)`; `Empty` beyond the
/// single-arm bound `θ ≤ π + asin(p/d)`.
pub fn intersection_circle(
    params: &JointParams,
    theta: f64,
    p: f64,
    tol: f64,
) -> Result<IntersectionResult> {
    if theta > theta_max(p, params)? + tol {
        return Ok(IntersectionResult::Empty);
    }
    raw_intersection(params, theta, p, tol)
}

/// The φ = 0 point: diametrically opposite B₁ on the circle.
fn phi_origin(circle: &Circle3, b1: &Vec3) -> Result<Vec3> {
    let toward_b1 = (*b1 - circle.center).reject_from(&circle.axis);
    let dir = toward_b1.normalized().ok_or(Error::DegenerateVector)?;
    Ok(circle.center - dir * circle.radius)
}

fn point_on_circle(circle: &Circle3, b1: &Vec3, phi: f64) -> Result<Vec3> {
    let far = phi_origin(circle, b1)?;
    Ok(circle.center + (far - circle.center).rotated_about(&circle.axis, phi))
}

fn phi_on_circle(circle: &Circle3, b1: &Vec3, h: &Vec3, tol: f64) -> Result<f64> {
    let residual = circle.residual(h);
    if residual > tol {
        return Err(Error::NotOnCircle { residual });
    }
    let v0 = phi_origin(circle, b1)? - circle.center;
    let v = *h - circle.center;
    Ok(circle.axis.dot(&v0.cross(&v)).atan2(v0.dot(&v)))
}

pub fn forward_arm(params: &JointParams, ctrl: &ControlTriple, tol: f64) -> Result<ArmSolution> {
    if !ctrl.phi.is_finite() || ctrl.phi.abs() >= PI {
        return Err(Error::PhiOutOfRange(ctrl.phi));
    }
    ctrl.validate(params, tol)?;
    let ball = ball_joint_position(params, ctrl.theta);
    let b1 = base_layout(params).hinges[0];
    let distal_hinge = match intersection_circle(params, ctrl.theta, ctrl.p, tol)? {
        IntersectionResult::Empty => {
            return Err(Error::NoIntersection {
                theta: ctrl.theta,
                theta_max: theta_max(ctrl.p, params)?,
            })
        }
        IntersectionResult::Point(q) => {
            if ctrl.phi.abs() > tol {
                return Err(Error::PhiAtPointIntersection(ctrl.phi));
            }
            q
        }
        IntersectionResult::CoincidentSpheres(_) => return Err(Error::AmbiguousSphere),
        IntersectionResult::Circle(c) => point_on_circle(&c, &b1, ctrl.phi)?,
    };
    Ok(ArmSolution {
        theta: ctrl.theta,
        p: ctrl.p,
        phi: ctrl.phi,
        ball_joint: ball,
        distal_hinge,
        within_bounds: true,
        sphere_angles: None,
    })
}

/// Pole of the coincident-sphere selector: from the Center toward the base.
const SELECTOR_POLE: Vec3 = Vec3::new(0.0, 0.0, -1.0);
const SELECTOR_E1: Vec3 = Vec3::X;
/// Completes `(E1, E2, POLE)` to a right-handed frame.
const SELECTOR_E2: Vec3 = Vec3::new(0.0, -1.0, 0.0);

/// Picks the distal hinge on the coincident sphere (`d = ℓ`,
/// `θ = asin(p/d)`) by colatitude `psi1` from the downward pole and longitude
/// `psi2` measured from the x–z plane.
pub fn coincident_selector(params: &JointParams, p: f64, psi1: f64, psi2: f64) -> Result<Vec3> {
    let found = regime(p, params, crate::geometry::DEFAULT_TOL)?;
    if found != Regime::DEqualL {
        return Err(Error::WrongRegime {
            expected: Regime::DEqualL,
            found,
        });
    }
    let (s1, c1) = psi1.sin_cos();
    let (s2, c2) = psi2.sin_cos();
    let dir = SELECTOR_E1 * (s1 * c2) + SELECTOR_E2 * (s1 * s2) + SELECTOR_POLE * c1;
    Ok(center_of(p) + dir * params.ell)
}

fn selector_angles(center: &Vec3, h: &Vec3) -> (f64, f64) {
    let v = *h - *center;
    let psi1 = v.cross(&SELECTOR_POLE).norm().atan2(v.dot(&SELECTOR_POLE));
    let psi2 = v.dot(&SELECTOR_E2).atan2(v.dot(&SELECTOR_E1));
    (psi1, psi2)
}

/// Inverse of the φ parametrization of [`forward_arm`].
pub fn phi_of_point(params: &JointParams, theta: f64, p: f64, h: &Vec3, tol: f64) -> Result<f64> {
    let b1 = base_layout(params).hinges[0];
    match intersection_circle(params, theta, p, tol)? {
        IntersectionResult::Circle(c) => phi_on_circle(&c, &b1, h, tol),
        IntersectionResult::Point(q) => {
            let residual = q.distance(h);
            if residual > tol {
                Err(Error::NotOnCircle { residual })
            } else {
                Ok(0.0)
            }
        }
        IntersectionResult::CoincidentSpheres(_) => Err(Error::AmbiguousSphere),
        IntersectionResult::Empty => Err(Error::NoIntersection {
            theta,
            theta_max: theta_max(p, params)?,
        }),
    }
}

/// Smallest plunge for which `theta` satisfies the single-arm bound.
fn min_plunge_for(theta: f64, params: &JointParams) -> f64 {
    if theta <= PI {
        0.0
    } else if theta >= 1.5 * PI {
        f64::INFINITY
    } else {
        params.rho() * (theta - PI).tan()
    }
}

/// All single-arm configurations placing the distal hinge at `h`.
///
/// This is the preimage of the unrestricted map (θ over the whole circle);
/// each finite solution records whether it also respects the single-arm angle
/// bound.
pub fn inverse_arm(params: &JointParams, h: &Vec3, tol: f64) -> Result<PreimageClass> {
    if !h.is_finite() {
        return Err(Error::Unreachable("non-finite target".into()));
    }
    let base = base_layout(params);
    let b1 = base.hinges[0];
    let rho = params.rho();
    let ell = params.ell;
    let arm_circle = Circle3 {
        center: b1,
        radius: ell,
        axis: base.hinge_axes[0],
    };

    if h.z.abs() < tol {
        let r = h.x.hypot(h.y);
        if (r - rho).abs() > tol {
            return Err(Error::Unreachable(format!(
                "point in the base plane at radius {r}, off the common circle of radius {rho}"
            )));
        }
        if h.distance(&b1) <= tol {
            return Ok(PreimageClass::IntervalTimesCircle);
        }
        let balls = circle_sphere_intersect(&arm_circle, &Sphere::new(*h, ell), tol)?;
        let mut members: Vec<ThetaFamily> = balls
            .iter()
            .map(|q| {
                let theta = base.theta_of(0, q);
                let floor = min_plunge_for(theta, params);
                ThetaFamily {
                    theta,
                    p_lo: 0.0,
                    p_hi: ell,
                    bounded_from: (floor <= ell).then_some(floor),
                }
            })
            .collect();
        if members.is_empty() {
            return Err(Error::Unreachable(
                "common-circle point out of arm reach".into(),
            ));
        }
        members.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        return Ok(PreimageClass::FiniteFamilyOverP(members));
    }

    let p = (h.norm_squared() - rho * rho) / (2.0 * h.z);
    let (lo, hi) = p_bounds(params);
    if p < lo - tol || p > hi + tol {
        return Err(Error::OutOfWorkspace { p });
    }
    let p = p.clamp(lo, hi);

    let balls = match circle_sphere_intersect(&arm_circle, &Sphere::new(*h, ell), tol) {
        Ok(balls) => balls,
        // Only possible for h = B1, which the base-plane branch handles.
        Err(Error::CoincidentCircles) => return Ok(PreimageClass::IntervalTimesCircle),
        Err(e) => return Err(e),
    };
    if balls.is_empty() {
        return Err(Error::Unreachable(
            "target lies outside the two-bar workspace".into(),
        ));
    }

    let limit = theta_max(p, params)?;
    let mut solutions = Vec::with_capacity(balls.len());
    for ball in balls {
        let theta = base.theta_of(0, &ball);
        let (phi, sphere_angles) = match raw_intersection(params, theta, p, tol)? {
            IntersectionResult::Circle(c) => (phi_on_circle(&c, &b1, h, 1e3 * tol)?, None),
            IntersectionResult::CoincidentSpheres(s) => (0.0, Some(selector_angles(&s.center, h))),
            IntersectionResult::Point(_) => (0.0, None),
            IntersectionResult::Empty => {
                return Err(Error::Invariant(
                    "ball joint solution without sphere intersection".into(),
                ))
            }
        };
        solutions.push(ArmSolution {
            theta,
            p,
            phi: wrap_pi(phi),
            ball_joint: ball,
            distal_hinge: *h,
            within_bounds: theta <= limit + tol,
            sphere_angles,
        });
    }
    solutions.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(PreimageClass::Finite(solutions))
}

/// Arm length of the planar reference linkage: each of the two bars is ½ so
/// the reach of the V0–V1–V2 chain is the unit disk.
pub const PLANAR_ARM: f64 = 0.5;

/// A configuration of the planar reference chain V0 → V1 → V2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    /// Direction of the bar V0 → V1.
    pub first: f64,
    /// Direction of the bar V1 → V2.
    pub second: f64,
    /// Direction of V3 → V2 when V2 is on the circle of the closing chain
    /// V0 → V3 → V2 (V3 fixed at `(½, 0)`), i.e. when the configuration
    /// extends to the full cyclic 4-bar.
    pub closing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanarPreimage {
    Finite(Vec<PlanarConfig>),
    CircleFamily,
}

/// Planar 4-bar reference: every chain configuration placing V2 at `target`.
pub fn planar_fourbar_solve(target: [f64; 2], tol: f64) -> Result<PlanarPreimage> {
    let [x, y] = target;
    let r = x.hypot(y);
    let reach = 2.0 * PLANAR_ARM;
    if !r.is_finite() || r > reach + tol {
        return Err(Error::Unreachable(format!(
            "target at distance {r} beyond reach {reach}"
        )));
    }
    if r <= tol {
        return Ok(PlanarPreimage::CircleFamily);
    }
    let heading = y.atan2(x);
    let closing = |first: f64, second: f64| {
        let v2 = [
            PLANAR_ARM * (first.cos() + second.cos()),
            PLANAR_ARM * (first.sin() + second.sin()),
        ];
        let rel = [v2[0] - PLANAR_ARM, v2[1]];
        let len = rel[0].hypot(rel[1]);
        ((len - PLANAR_ARM).abs() <= tol).then(|| wrap_pi(rel[1].atan2(rel[0])))
    };
    let make = |first: f64, second: f64| PlanarConfig {
        first: wrap_pi(first),
        second: wrap_pi(second),
        closing: closing(first, second),
    };
    if (r - reach).abs() <= tol {
        return Ok(PlanarPreimage::Finite(vec![make(heading, heading)]));
    }
    let spread = (r / reach).clamp(-1.0, 1.0).acos();
    Ok(PlanarPreimage::Finite(vec![
        make(heading + spread, heading - spread),
        make(heading - spread, heading + spread),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DEFAULT_TOL;
    use crate::joint_model::boundary_theta;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(ell: f64, b: f64) -> JointParams {
        JointParams::new(ell, b).unwrap()
    }

    #[test]
    fn ball_joint_examples() {
        let p = params(6.0, 4.0);
        let rho = p.rho();
        let flat = ball_joint_position(&p, PI);
        assert!(flat.distance(&Vec3::new(rho + 6.0, 0.0, 0.0)) < 1e-12);
        let up = ball_joint_position(&p, PI / 2.0);
        assert!(up.distance(&Vec3::new(rho, 0.0, 6.0)) < 1e-12);
        let q = ball_joint_position(&p, 150f64.to_radians());
        assert!(q.distance(&Vec3::new(7.505_553_499_465_135, 0.0, 3.0)) < 1e-12);
    }

    #[test]
    fn folded_arm_meets_in_base_hinge() {
        let p = params(6.0, 4.0);
        match intersection_circle(&p, PI, 0.0, DEFAULT_TOL).unwrap() {
            IntersectionResult::Point(q) => {
                assert!(q.distance(&Vec3::new(p.rho(), 0.0, 0.0)) < 1e-12)
            }
            other => panic!("expected point, got {other:?}"),
        }
    }

    #[test]
    fn coincident_spheres_when_d_equals_ell() {
        let p = params(2f64.sqrt(), 3f64.sqrt());
        let r = intersection_circle(&p, PI / 4.0, 1.0, DEFAULT_TOL).unwrap();
        let IntersectionResult::CoincidentSpheres(s) = r else {
            panic!("expected coincident spheres, got {r:?}");
        };
        assert!(s.center.distance(&Vec3::new(0.0, 0.0, 1.0)) < 1e-12);
        let ctrl = ControlTriple::new(PI / 4.0, 1.0, 0.3);
        assert!(matches!(
            forward_arm(&p, &ctrl, DEFAULT_TOL),
            Err(Error::AmbiguousSphere)
        ));
    }

    #[test]
    fn beyond_the_bound_is_empty() {
        let p = params(6.0, 4.0);
        let max = theta_max(2.0, &p).unwrap();
        assert!(intersection_circle(&p, max + 1e-3, 2.0, DEFAULT_TOL)
            .unwrap()
            .is_empty());
        let ctrl = ControlTriple::new(max + 1e-3, 2.0, 0.0);
        assert!(matches!(
            forward_arm(&p, &ctrl, DEFAULT_TOL),
            Err(Error::NoIntersection { .. })
        ));
    }

    /// Independent route for the reference arm: intersect the two spheres by
    /// sampling one of them densely, then refine the circle by least squares
    /// on the sampled near-intersection band.
    #[test]
    fn reference_pose_circle_matches_sampling() {
        let p = params(6.0, 4.0);
        let theta = 150f64.to_radians();
        let plunge = 5.8;
        let IntersectionResult::Circle(c) =
            intersection_circle(&p, theta, plunge, DEFAULT_TOL).unwrap()
        else {
            panic!("expected circle");
        };
        let ball = ball_joint_position(&p, theta);
        let hub = Vec3::new(0.0, 0.0, plunge);
        let d = d_of(plunge, &p).unwrap();
        // Sample the ℓ-sphere on a fine latitude/longitude grid and keep points
        // whose distance to the hub matches d; the kept points bracket the
        // circle from both sides, so their plane fit and mean radius converge.
        let n = 400;
        let mut kept = Vec::new();
        for i in 0..n {
            let polar = PI * (i as f64 + 0.5) / n as f64;
            for j in 0..(2 * n) {
                let az = PI * j as f64 / n as f64;
                let dir = Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos());
                let q = ball + dir * p.ell;
                if (q.distance(&hub) - d).abs() < 0.05 {
                    kept.push(q);
                }
            }
        }
        assert!(kept.len() > 300, "{}", kept.len());
        // Project the kept points on the line of centers: the circle's plane.
        let axis = (hub - ball) / (hub - ball).norm();
        let along: f64 =
            kept.iter().map(|q| (*q - ball).dot(&axis)).sum::<f64>() / kept.len() as f64;
        let center = ball + axis * along;
        let radius: f64 = kept
            .iter()
            .map(|q| (*q - center).reject_from(&axis).norm())
            .sum::<f64>()
            / kept.len() as f64;
        assert!(
            c.center.distance(&center) < 5e-3,
            "{:?} vs {:?}",
            c.center,
            center
        );
        assert!((c.radius - radius).abs() < 5e-3);
        assert!(c.axis.distance(&axis) < 1e-12);
        // Exact membership residuals of the analytic circle.
        for q in c.sample(64) {
            assert!((q.distance(&ball) - p.ell).abs() < 1e-9);
            assert!((q.distance(&hub) - d).abs() < 1e-9);
        }
    }

    #[test]
    fn phi_zero_lies_in_arm_plane_far_from_hinge() {
        let p = params(6.0, 4.0);
        let b1 = Vec3::new(p.rho(), 0.0, 0.0);
        for (theta, plunge) in [(2.0, 1.0), (150f64.to_radians(), 5.8), (0.4, 3.0)] {
            let sol =
                forward_arm(&p, &ControlTriple::new(theta, plunge, 0.0), DEFAULT_TOL).unwrap();
            assert!(sol.distal_hinge.y.abs() < 1e-12);
            for phi in [-2.5, -1.0, 0.5, 3.0] {
                let other =
                    forward_arm(&p, &ControlTriple::new(theta, plunge, phi), DEFAULT_TOL).unwrap();
                assert!(other.distal_hinge.distance(&b1) <= sol.distal_hinge.distance(&b1) + 1e-12);
            }
        }
    }

    #[test]
    fn folded_control_returns_base_hinge() {
        let p = params(6.0, 4.0);
        let sol = forward_arm(&p, &ControlTriple::new(PI, 0.0, 0.0), DEFAULT_TOL).unwrap();
        assert!(sol.distal_hinge.distance(&Vec3::new(p.rho(), 0.0, 0.0)) < 1e-12);
        assert!(matches!(
            forward_arm(&p, &ControlTriple::new(PI, 0.0, 0.2), DEFAULT_TOL),
            Err(Error::PhiAtPointIntersection(_))
        ));
        assert!(matches!(
            forward_arm(&p, &ControlTriple::new(1.0, 1.0, PI), DEFAULT_TOL),
            Err(Error::PhiOutOfRange(_))
        ));
    }

    /// Independent solver for the reference arm: Newton on the two sphere
    /// memberships plus the rotation-angle equation, starting from the φ = 0
    /// point of the circle.
    #[test]
    fn reference_pose_forward_matches_newton_oracle() {
        let p = params(6.0, 4.0);
        let ctrl = ControlTriple::from_degrees(150.0, 5.8, 20.0);
        let sol = forward_arm(&p, &ctrl, DEFAULT_TOL).unwrap();

        let ball = ball_joint_position(&p, ctrl.theta);
        let hub = Vec3::new(0.0, 0.0, ctrl.p);
        let d = d_of(ctrl.p, &p).unwrap();
        let b1 = Vec3::new(p.rho(), 0.0, 0.0);
        let axis = (hub - ball) / (hub - ball).norm();
        // Far point: maximize distance to b1 over the circle by dense scan.
        let IntersectionResult::Circle(c) =
            intersection_circle(&p, ctrl.theta, ctrl.p, DEFAULT_TOL).unwrap()
        else {
            panic!()
        };
        let far = (0..100_000)
            .map(|k| c.point_at(TAU * k as f64 / 100_000.0))
            .max_by(|a, b| a.distance(&b1).total_cmp(&b.distance(&b1)))
            .unwrap();
        let f = |x: Vec3| -> [f64; 3] {
            let v0 = (far - c.center).reject_from(&axis);
            let v = (x - c.center).reject_from(&axis);
            let angle = axis.dot(&v0.cross(&v)).atan2(v0.dot(&v));
            [
                x.distance(&ball) - p.ell,
                x.distance(&hub) - d,
                angle - ctrl.phi,
            ]
        };
        let mut x = far;
        for _ in 0..50 {
            let r = f(x);
            let h = 1e-7;
            let mut jac = [[0.0; 3]; 3];
            for k in 0..3 {
                let mut e = [0.0; 3];
                e[k] = h;
                let xp = x + Vec3::new(e[0], e[1], e[2]);
                let rp = f(xp);
                for i in 0..3 {
                    jac[i][k] = (rp[i] - r[i]) / h;
                }
            }
            let dx = solve3(jac, [-r[0], -r[1], -r[2]]);
            x += Vec3::new(dx[0], dx[1], dx[2]);
        }
        // The dense scan locates the far point to ~1e-9 radians of arc.
        assert!(
            x.distance(&sol.distal_hinge) < 1e-6,
            "{x:?} vs {:?}",
            sol.distal_hinge
        );
    }

    fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(a);
        let mut out = [0.0; 3];
        for k in 0..3 {
            let mut m = a;
            for i in 0..3 {
                m[i][k] = b[i];
            }
            out[k] = det(m) / d;
        }
        out
    }

    #[test]
    fn coincident_selector_examples() {
        let p = params(2f64.sqrt(), 3f64.sqrt());
        let pole = coincident_selector(&p, 1.0, 0.0, 0.0).unwrap();
        assert!(pole.x.abs() < 1e-15 && pole.y.abs() < 1e-15);
        let eq = coincident_selector(&p, 1.0, PI / 2.0, 0.0).unwrap();
        assert!(eq.y.abs() < 1e-15);
        let ball = ball_joint_position(&p, PI / 4.0);
        let hub = Vec3::new(0.0, 0.0, 1.0);
        for (a, b) in [(0.3, 1.2), (2.0, -2.5), (1.1, 0.0)] {
            let q = coincident_selector(&p, 1.0, a, b).unwrap();
            assert!((q.distance(&ball) - 2f64.sqrt()).abs() < 1e-12);
            assert!((q.distance(&hub) - 2f64.sqrt()).abs() < 1e-12);
            let (a2, b2) = selector_angles(&hub, &q);
            assert!((a2 - a).abs() < 1e-12 && wrap_pi(b2 - b).abs() < 1e-12);
        }
        assert!(matches!(
            coincident_selector(&params(6.0, 4.0), 1.0, 0.0, 0.0),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn phi_of_point_examples() {
        let p = params(6.0, 4.0);
        let (theta, plunge) = (2.0, 2.5);
        let far = forward_arm(&p, &ControlTriple::new(theta, plunge, 0.0), DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(
            phi_of_point(&p, theta, plunge, &far.distal_hinge, DEFAULT_TOL).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        for phi in [3.0, 3.1, PI - 1.6e-3, PI - 9.3e-5] {
            let near =
                forward_arm(&p, &ControlTriple::new(theta, plunge, phi), DEFAULT_TOL).unwrap();
            let back = phi_of_point(&p, theta, plunge, &near.distal_hinge, DEFAULT_TOL).unwrap();
            assert_abs_diff_eq!(back, phi, epsilon = 1e-9);
        }
        assert!(matches!(
            phi_of_point(&p, theta, plunge, &Vec3::new(100.0, 0.0, 0.0), DEFAULT_TOL),
            Err(Error::NotOnCircle { .. })
        ));
    }

    #[test]
    fn inverse_of_base_hinge_is_interval_times_circle() {
        let p = params(6.0, 4.0);
        let b1 = Vec3::new(p.rho(), 0.0, 0.0);
        assert_eq!(
            inverse_arm(&p, &b1, DEFAULT_TOL).unwrap(),
            PreimageClass::IntervalTimesCircle
        );
    }

    #[test]
    fn inverse_in_d_less_regime_has_two_preimages() {
        let p = params(6.0, 4.0);
        let ctrl = ControlTriple::new(1.3, 1.5, 0.7);
        assert_eq!(regime(ctrl.p, &p, DEFAULT_TOL).unwrap(), Regime::DLessL);
        let sol = forward_arm(&p, &ctrl, DEFAULT_TOL).unwrap();
        let PreimageClass::Finite(found) = inverse_arm(&p, &sol.distal_hinge, DEFAULT_TOL).unwrap()
        else {
            panic!()
        };
        assert_eq!(found.len(), 2);
        assert!(found.iter().any(|s| (s.theta - ctrl.theta).abs() < 1e-9
            && (s.p - ctrl.p).abs() < 1e-9
            && (s.phi - ctrl.phi).abs() < 1e-9));
    }

    #[test]
    fn inverse_on_boundary_circle_is_unique() {
        let p = params(6.0, 4.0);
        let plunge = 5.8;
        let theta = boundary_theta(plunge, &p).unwrap();
        for phi in [-2.0, -0.5, 0.0, 1.0, 2.9] {
            let sol =
                forward_arm(&p, &ControlTriple::new(theta, plunge, phi), DEFAULT_TOL).unwrap();
            let pre = inverse_arm(&p, &sol.distal_hinge, DEFAULT_TOL).unwrap();
            assert_eq!(pre.finite_count(), Some(1), "phi = {phi}: {pre:?}");
        }
    }

    #[test]
    fn inverse_on_common_circle_is_a_family_over_p() {
        let p = params(6.0, 4.0);
        let rho = p.rho();
        let h = Vec3::new(rho * 1.0f64.cos(), rho * 1.0f64.sin(), 0.0);
        let PreimageClass::FiniteFamilyOverP(fam) = inverse_arm(&p, &h, DEFAULT_TOL).unwrap()
        else {
            panic!()
        };
        // The ℓ-sphere about h cuts the swing circle of B₁ twice.
        assert_eq!(fam.len(), 2);
        for member in &fam {
            for t in [0.0, 0.5, 1.0] {
                let plunge = member.p_lo + t * (member.p_hi - member.p_lo);
                let r = raw_intersection(&p, member.theta, plunge, DEFAULT_TOL).unwrap();
                let IntersectionResult::Circle(c) = r else {
                    panic!("{r:?}")
                };
                assert!(c.residual(&h) < 1e-9);
            }
            if let Some(from) = member.bounded_from {
                let r = intersection_circle(&p, member.theta, from.max(1e-6) + 1e-6, DEFAULT_TOL)
                    .unwrap();
                assert!(!r.is_empty());
            }
        }
        assert!(fam.iter().any(|m| m.bounded_from == Some(0.0)));
        let off = Vec3::new(2.0 * rho, 0.0, 0.0);
        assert!(matches!(
            inverse_arm(&p, &off, DEFAULT_TOL),
            Err(Error::Unreachable(_))
        ));
    }

    #[test]
    fn inverse_rejects_targets_needing_too_much_plunge() {
        let p = params(6.0, 4.0);
        assert!(matches!(
            inverse_arm(&p, &Vec3::new(0.0, 0.0, 30.0), DEFAULT_TOL),
            Err(Error::OutOfWorkspace { .. })
        ));
    }

    #[test]
    fn planar_reference_examples() {
        let PlanarPreimage::Finite(one) = planar_fourbar_solve([1.0, 0.0], DEFAULT_TOL).unwrap()
        else {
            panic!()
        };
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0].first, 0.0);
        assert_abs_diff_eq!(one[0].second, 0.0);
        assert_eq!(one[0].closing, Some(0.0));

        let PlanarPreimage::Finite(two) = planar_fourbar_solve([0.5, 0.0], DEFAULT_TOL).unwrap()
        else {
            panic!()
        };
        assert_eq!(two.len(), 2);
        for c in &two {
            let x = PLANAR_ARM * (c.first.cos() + c.second.cos());
            let y = PLANAR_ARM * (c.first.sin() + c.second.sin());
            assert!((x - 0.5).abs() < 1e-12 && y.abs() < 1e-12);
        }

        assert_eq!(
            planar_fourbar_solve([0.0, 0.0], DEFAULT_TOL).unwrap(),
            PlanarPreimage::CircleFamily
        );
        assert!(matches!(
            planar_fourbar_solve([1.5, 0.0], DEFAULT_TOL),
            Err(Error::Unreachable(_))
        ));
    }

    fn arb_case() -> impl Strategy<Value = (JointParams, ControlTriple)> {
        (
            0.5f64..8.0,
            0.5f64..8.0,
            0.0f64..1.0,
            0.0f64..1.0,
            -0.98f64..0.98,
        )
            .prop_filter_map(
                "valid, non-coincident single-arm control",
                |(ell, b, tp, tt, tphi)| {
                    let p = JointParams::new(ell, b).ok()?;
                    let plunge = tp * ell;
                    let max = theta_max(plunge, &p).ok()?;
                    let theta = tt * max;
                    let ctrl = ControlTriple::new(theta, plunge, tphi * PI);
                    match intersection_circle(&p, theta, plunge, DEFAULT_TOL).ok()? {
                        IntersectionResult::Circle(c) if c.radius > 1e-3 => Some((p, ctrl)),
                        _ => None,
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn phi_round_trip_and_bar_lengths((p, ctrl) in arb_case()) {
            let sol = forward_arm(&p, &ctrl, DEFAULT_TOL).unwrap();
            let b1 = Vec3::new(p.rho(), 0.0, 0.0);
            prop_assert!((sol.ball_joint.distance(&b1) - p.ell).abs() < 1e-9);
            prop_assert!((sol.distal_hinge.distance(&sol.ball_joint) - p.ell).abs() < 1e-9);
            let d = d_of(ctrl.p, &p).unwrap();
            prop_assert!((sol.distal_hinge.distance(&Vec3::new(0.0, 0.0, ctrl.p)) - d).abs() < 1e-9);
            let back = phi_of_point(&p, ctrl.theta, ctrl.p, &sol.distal_hinge, DEFAULT_TOL).unwrap();
            prop_assert!((back - ctrl.phi).abs() < 1e-9);
        }

        #[test]
        fn phi_zero_is_symmetric((p, ctrl) in arb_case()) {
            let sol = forward_arm(&p, &ControlTriple { phi: 0.0, ..ctrl }, DEFAULT_TOL).unwrap();
            prop_assert!(sol.distal_hinge.y.abs() < 1e-12);
        }
    }
}
