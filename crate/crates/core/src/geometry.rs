//! 3D primitives and the intersection routines the kinematics is built on.
//!
//! Every routine takes an absolute tolerance in model length units. Results
//! that are within `tol` of a degenerate case (tangency, coincidence) are
//! classified as that case rather than returned as a numerically tiny circle.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for geometric classification.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawVec3")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Deserialize)]
struct RawVec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<RawVec3> for Vec3 {
    type Error = String;

    fn try_from(raw: RawVec3) -> std::result::Result<Self, Self::Error> {
        let v = Vec3::new(raw.x, raw.y, raw.z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite vector component in {v:?}"))
        }
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(&self) -> Option<Vec3> {
        let n = self.norm();
        if n > f64::MIN_POSITIVE && n.is_finite() {
            Some(*self / n)
        } else {
            None
        }
    }

    /// Component of `self` orthogonal to the unit vector `axis`.
    pub fn reject_from(&self, axis: &Vec3) -> Vec3 {
        *self - *axis * self.dot(axis)
    }

    /// Rodrigues rotation about the unit vector `axis` by `angle` (right-handed).
    pub fn rotated_about(&self, axis: &Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        *self * c + axis.cross(self) * s + *axis * (axis.dot(self) * (1.0 - c))
    }

    /// A deterministic unit vector perpendicular to the unit vector `self`.
    pub fn any_perpendicular(&self) -> Vec3 {
        // Cross with the basis vector least aligned with self.
        let a = [self.x.abs(), self.y.abs(), self.z.abs()];
        let pick = if a[0] <= a[1] && a[0] <= a[2] {
            Vec3::X
        } else if a[1] <= a[2] {
            Vec3::Y
        } else {
            Vec3::Z
        };
        self.cross(&pick)
            .normalized()
            .expect("cross product with least-aligned basis vector is non-zero")
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// An oriented plane through `point` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    /// Builds a plane, normalizing `normal`.
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        let normal = normal.normalized().ok_or(Error::DegenerateVector)?;
        Ok(Self { point, normal })
    }

    pub fn signed_distance(&self, q: &Vec3) -> f64 {
        self.normal.dot(&(*q - self.point))
    }

    /// Mirror image of a free vector (direction) across the plane.
    pub fn reflect_vector(&self, v: &Vec3) -> Vec3 {
        *v - self.normal * (2.0 * self.normal.dot(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "sphere radius must be non-negative");
        Self { center, radius }
    }

    /// Signed distance of `q` from the sphere surface.
    pub fn surface_residual(&self, q: &Vec3) -> f64 {
        q.distance(&self.center) - self.radius
    }
}

/// A circle in 3D: `center`, `radius`, and the unit normal `axis` of its plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle3 {
    pub center: Vec3,
    pub radius: f64,
    pub axis: Vec3,
}

impl Circle3 {
    pub fn new(center: Vec3, radius: f64, axis: Vec3) -> Result<Self> {
        let axis = axis.normalized().ok_or(Error::DegenerateVector)?;
        Ok(Self {
            center,
            radius,
            axis,
        })
    }

    pub fn plane(&self) -> Plane {
        Plane {
            point: self.center,
            normal: self.axis,
        }
    }

    /// Orthonormal in-plane basis `(e1, e2)` with `e1 x e2 = axis`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let e1 = self.axis.any_perpendicular();
        let e2 = self.axis.cross(&e1);
        (e1, e2)
    }

    pub fn point_at(&self, angle: f64) -> Vec3 {
        let (e1, e2) = self.basis();
        let (s, c) = angle.sin_cos();
        self.center + (e1 * c + e2 * s) * self.radius
    }

    /// `n` points evenly spaced around the circle.
    pub fn sample(&self, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|k| self.point_at(std::f64::consts::TAU * k as f64 / n as f64))
            .collect()
    }

    /// Largest deviation of `q` from the circle: out-of-plane or off-radius.
    pub fn residual(&self, q: &Vec3) -> f64 {
        let v = *q - self.center;
        let off_plane = self.axis.dot(&v);
        let in_plane = v.reject_from(&self.axis).norm();
        off_plane.abs().max((in_plane - self.radius).abs())
    }
}

/// Outcome of intersecting two spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum IntersectionResult {
    Empty,
    Point(Vec3),
    Circle(Circle3),
    CoincidentSpheres(Sphere),
}

impl IntersectionResult {
    pub fn is_empty(&self) -> bool {
        matches!(self, IntersectionResult::Empty)
    }
}

/// Intersects two spheres, classifying tangency and coincidence within `tol`.
///
/// A circle's axis points from `a.center` toward `b.center`.
pub fn sphere_sphere_intersect(a: &Sphere, b: &Sphere, tol: f64) -> IntersectionResult {
    let offset = b.center - a.center;
    let dist = offset.norm();
    let sum = a.radius + b.radius;
    let diff = (a.radius - b.radius).abs();

    if dist <= tol {
        return if diff <= tol {
            IntersectionResult::CoincidentSpheres(*a)
        } else {
            IntersectionResult::Empty
        };
    }
    if dist > sum + tol || dist < diff - tol {
        return IntersectionResult::Empty;
    }

    let axis = offset / dist;
    // Signed distance from a.center to the radical plane.
    let along = (dist * dist + a.radius * a.radius - b.radius * b.radius) / (2.0 * dist);
    if (dist - sum).abs() <= tol || (dist - diff).abs() <= tol {
        return IntersectionResult::Point(a.center + axis * along);
    }
    let r2 = a.radius * a.radius - along * along;
    if r2 <= 0.0 {
        return IntersectionResult::Point(a.center + axis * along);
    }
    IntersectionResult::Circle(Circle3 {
        center: a.center + axis * along,
        radius: r2.sqrt(),
        axis,
    })
}

/// Points of `c` lying on `plane` (0, 1 or 2 of them).
///
/// Fails with [`Error::CircleInPlane`] when the circle lies in the plane.
pub fn circle_plane_intersect(c: &Circle3, plane: &Plane, tol: f64) -> Result<Vec<Vec3>> {
    let center_dist = plane.signed_distance(&c.center);
    // In-plane gradient of the signed distance along the circle's plane.
    let grad = plane.normal.reject_from(&c.axis);
    let slope = grad.norm();
    if slope <= tol {
        return if center_dist.abs() <= tol {
            Err(Error::CircleInPlane)
        } else {
            Ok(Vec::new())
        };
    }
    let dir = grad / slope;
    // Foot of the intersection line nearest the circle center.
    let reach = center_dist / slope;
    let foot = c.center - dir * reach;
    let gap = reach.abs() - c.radius;
    if gap > tol {
        return Ok(Vec::new());
    }
    if gap.abs() <= tol {
        return Ok(vec![c.center - dir * (c.radius * reach.signum())]);
    }
    let half_chord = (c.radius * c.radius - reach * reach).max(0.0).sqrt();
    let line = c.axis.cross(&dir);
    Ok(vec![foot + line * half_chord, foot - line * half_chord])
}

pub fn perp_bisector_plane(a: &Vec3, b: &Vec3, tol: f64) -> Result<Plane> {
    let offset = *b - *a;
    let len = offset.norm();
    if len <= tol {
        return Err(Error::CoincidentPoints);
    }
    Ok(Plane {
        point: (*a + *b) * 0.5,
        normal: offset / len,
    })
}

pub fn reflect_point(plane: &Plane, q: &Vec3) -> Vec3 {
    *q - plane.normal * (2.0 * plane.signed_distance(q))
}

/// Intersection of two circles lying in the same plane.
fn coplanar_circle_intersect(c1: &Circle3, c2: &Circle3, tol: f64) -> Result<Vec<Vec3>> {
    let offset = (c2.center - c1.center).reject_from(&c1.axis);
    let dist = offset.norm();
    let diff = (c1.radius - c2.radius).abs();
    if dist <= tol {
        return if diff <= tol {
            Err(Error::CoincidentCircles)
        } else {
            Ok(Vec::new())
        };
    }
    let sum = c1.radius + c2.radius;
    if dist > sum + tol || dist < diff - tol {
        return Ok(Vec::new());
    }
    let dir = offset / dist;
    let along = (dist * dist + c1.radius * c1.radius - c2.radius * c2.radius) / (2.0 * dist);
    let foot = c1.center + dir * along;
    if (dist - sum).abs() <= tol || (dist - diff).abs() <= tol {
        return Ok(vec![foot]);
    }
    let half_chord = (c1.radius * c1.radius - along * along).max(0.0).sqrt();
    let perp = c1.axis.cross(&dir);
    Ok(vec![foot + perp * half_chord, foot - perp * half_chord])
}

/// Intersection of two circles in 3D (0, 1 or 2 points).
///
/// Non-coplanar circles go through [`circle_plane_intersect`] against the
/// plane of `c2` followed by a membership check on `c2`. Coplanar circles use
/// the planar construction and fail only when the circles coincide.
pub fn circle_circle_intersect_3d(c1: &Circle3, c2: &Circle3, tol: f64) -> Result<Vec<Vec3>> {
    let plane2 = c2.plane();
    match circle_plane_intersect(c1, &plane2, tol) {
        Ok(points) => Ok(points
            .into_iter()
            .filter(|q| c2.residual(q) <= tol)
            .collect()),
        Err(Error::CircleInPlane) => coplanar_circle_intersect(c1, c2, tol),
        Err(e) => Err(e),
    }
}

/// Points where the circle `c` meets the sphere `s` (0, 1 or 2 points).
///
/// Fails with [`Error::CoincidentCircles`] when the whole circle lies on the
/// sphere.
pub fn circle_sphere_intersect(c: &Circle3, s: &Sphere, tol: f64) -> Result<Vec<Vec3>> {
    let height = c.axis.dot(&(s.center - c.center));
    let r2 = s.radius * s.radius - height * height;
    let slice_radius = if r2 >= 0.0 {
        r2.sqrt()
    } else if -r2 <= 2.0 * s.radius * tol {
        0.0
    } else {
        return Ok(Vec::new());
    };
    let slice = Circle3 {
        center: s.center - c.axis * height,
        radius: slice_radius,
        axis: c.axis,
    };
    coplanar_circle_intersect(c, &slice, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_vec_eq(a: Vec3, b: Vec3, eps: f64) {
        assert!(a.distance(&b) <= eps, "{a:?} != {b:?}");
    }

    #[test]
    fn external_tangency_is_a_point() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let b = Sphere::new(Vec3::new(2.0, 0.0, 0.0), 1.0);
        match sphere_sphere_intersect(&a, &b, DEFAULT_TOL) {
            IntersectionResult::Point(q) => assert_vec_eq(q, Vec3::X, 1e-15),
            other => panic!("expected point, got {other:?}"),
        }
    }

    #[test]
    fn internal_tangency_is_a_point() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let b = Sphere::new(Vec3::new(0.5, 0.0, 0.0), 0.5);
        match sphere_sphere_intersect(&a, &b, DEFAULT_TOL) {
            IntersectionResult::Point(q) => assert_vec_eq(q, Vec3::X, 1e-15),
            other => panic!("expected point, got {other:?}"),
        }
        match sphere_sphere_intersect(&b, &a, DEFAULT_TOL) {
            IntersectionResult::Point(q) => assert_vec_eq(q, Vec3::X, 1e-15),
            other => panic!("expected point, got {other:?}"),
        }
    }

    #[test]
    fn identical_spheres_coincide() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        assert_eq!(
            sphere_sphere_intersect(&a, &a, DEFAULT_TOL),
            IntersectionResult::CoincidentSpheres(a)
        );
    }

    #[test]
    fn concentric_distinct_radii_are_empty() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let b = Sphere::new(Vec3::ZERO, 2.0);
        assert!(sphere_sphere_intersect(&a, &b, DEFAULT_TOL).is_empty());
    }

    #[test]
    fn separated_and_nested_spheres_are_empty() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let far = Sphere::new(Vec3::new(3.0, 0.0, 0.0), 1.0);
        let inner = Sphere::new(Vec3::new(0.1, 0.0, 0.0), 0.2);
        assert!(sphere_sphere_intersect(&a, &far, DEFAULT_TOL).is_empty());
        assert!(sphere_sphere_intersect(&a, &inner, DEFAULT_TOL).is_empty());
    }

    #[test]
    fn unit_spheres_offset_by_one_meet_in_circle() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let b = Sphere::new(Vec3::X, 1.0);
        let IntersectionResult::Circle(c) = sphere_sphere_intersect(&a, &b, DEFAULT_TOL) else {
            panic!("expected circle");
        };
        assert_vec_eq(c.center, Vec3::new(0.5, 0.0, 0.0), 1e-15);
        assert_abs_diff_eq!(c.radius, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_vec_eq(c.axis, Vec3::X, 1e-15);
    }

    /// Independent check of the circle above: sample both spheres densely and
    /// keep the points that lie on the other sphere too.
    #[test]
    fn sampled_sphere_points_agree_with_circle() {
        let a = Sphere::new(Vec3::ZERO, 1.0);
        let b = Sphere::new(Vec3::X, 1.0);
        let n = 100; // 100 x 100 = 10^4 points per sphere
        let mut shared = Vec::new();
        for s in [&a, &b] {
            let other = if std::ptr::eq(s, &a) { &b } else { &a };
            for i in 0..n {
                let polar = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                for j in 0..n {
                    let azim = std::f64::consts::TAU * j as f64 / n as f64;
                    let dir = Vec3::new(
                        polar.cos(),
                        polar.sin() * azim.cos(),
                        polar.sin() * azim.sin(),
                    );
                    let q = s.center + dir * s.radius;
                    if other.surface_residual(&q).abs() < 2e-2 {
                        shared.push(q);
                    }
                }
            }
        }
        assert!(!shared.is_empty());
        let mean_x = shared.iter().map(|q| q.x).sum::<f64>() / shared.len() as f64;
        let mean_r = shared.iter().map(|q| q.y.hypot(q.z)).sum::<f64>() / shared.len() as f64;
        assert_abs_diff_eq!(mean_x, 0.5, epsilon = 1e-2);
        assert_abs_diff_eq!(mean_r, 3f64.sqrt() / 2.0, epsilon = 1e-2);
    }

    #[test]
    fn circle_meets_plane_in_two_one_or_no_points() {
        let c = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let x0 = Plane::new(Vec3::ZERO, Vec3::X).unwrap();
        let mut pts = circle_plane_intersect(&c, &x0, DEFAULT_TOL).unwrap();
        pts.sort_by(|a, b| b.y.total_cmp(&a.y));
        assert_eq!(pts.len(), 2);
        assert_vec_eq(pts[0], Vec3::Y, 1e-15);
        assert_vec_eq(pts[1], -Vec3::Y, 1e-15);

        let x1 = Plane::new(Vec3::X, Vec3::X).unwrap();
        let pts = circle_plane_intersect(&c, &x1, DEFAULT_TOL).unwrap();
        assert_eq!(pts.len(), 1);
        assert_vec_eq(pts[0], Vec3::X, 1e-15);

        let x2 = Plane::new(Vec3::new(2.0, 0.0, 0.0), Vec3::X).unwrap();
        assert!(circle_plane_intersect(&c, &x2, DEFAULT_TOL)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn circle_in_its_own_plane_is_an_error() {
        let c = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let z0 = Plane::new(Vec3::new(5.0, 1.0, 0.0), -Vec3::Z).unwrap();
        assert!(matches!(
            circle_plane_intersect(&c, &z0, DEFAULT_TOL),
            Err(Error::CircleInPlane)
        ));
        let z1 = Plane::new(Vec3::Z, Vec3::Z).unwrap();
        assert!(circle_plane_intersect(&c, &z1, DEFAULT_TOL)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn bisector_planes() {
        let pl = perp_bisector_plane(&Vec3::ZERO, &Vec3::new(2.0, 0.0, 0.0), DEFAULT_TOL).unwrap();
        assert_vec_eq(pl.point, Vec3::X, 0.0);
        assert_vec_eq(pl.normal, Vec3::X, 0.0);

        let a = Vec3::new(1.0, 1.0, 1.0);
        let b = Vec3::new(1.0, 1.0, 3.0);
        let pl = perp_bisector_plane(&a, &b, DEFAULT_TOL).unwrap();
        assert_vec_eq(pl.point, Vec3::new(1.0, 1.0, 2.0), 0.0);
        assert_vec_eq(pl.normal, Vec3::Z, 0.0);
        assert_vec_eq(reflect_point(&pl, &a), b, 1e-15);

        assert!(matches!(
            perp_bisector_plane(&a, &a, DEFAULT_TOL),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn reflections() {
        let z0 = Plane::new(Vec3::ZERO, Vec3::Z).unwrap();
        assert_vec_eq(
            reflect_point(&z0, &Vec3::new(1.0, 2.0, 3.0)),
            Vec3::new(1.0, 2.0, -3.0),
            0.0,
        );
        let on = Vec3::new(4.0, -2.0, 0.0);
        assert_vec_eq(reflect_point(&z0, &on), on, 0.0);
        let x1 = Plane::new(Vec3::X, Vec3::X).unwrap();
        assert_vec_eq(
            reflect_point(&x1, &Vec3::new(0.0, 5.0, 5.0)),
            Vec3::new(2.0, 5.0, 5.0),
            0.0,
        );
    }

    #[test]
    fn planar_circle_pair() {
        let c1 = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let c2 = Circle3::new(Vec3::X, 1.0, Vec3::Z).unwrap();
        let mut pts = circle_circle_intersect_3d(&c1, &c2, DEFAULT_TOL).unwrap();
        pts.sort_by(|a, b| b.y.total_cmp(&a.y));
        assert_eq!(pts.len(), 2);
        assert_vec_eq(pts[0], Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0), 1e-15);
        assert_vec_eq(pts[1], Vec3::new(0.5, -(3f64.sqrt()) / 2.0, 0.0), 1e-15);
    }

    /// Unit circles about the origin in z=0 and x=0: solving x²+y²=1, z=0
    /// together with y²+z²=1, x=0 by hand gives y = ±1.
    #[test]
    fn perpendicular_circles_share_two_points() {
        let c1 = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let c2 = Circle3::new(Vec3::ZERO, 1.0, Vec3::X).unwrap();
        let mut pts = circle_circle_intersect_3d(&c1, &c2, DEFAULT_TOL).unwrap();
        pts.sort_by(|a, b| b.y.total_cmp(&a.y));
        assert_eq!(pts.len(), 2);
        assert_vec_eq(pts[0], Vec3::Y, 1e-15);
        assert_vec_eq(pts[1], -Vec3::Y, 1e-15);
        for q in &pts {
            assert!(c1.residual(q) < 1e-15 && c2.residual(q) < 1e-15);
        }
    }

    #[test]
    fn parallel_planes_and_coincident_circles() {
        let c1 = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let c2 = Circle3::new(Vec3::Z, 1.0, Vec3::Z).unwrap();
        assert!(circle_circle_intersect_3d(&c1, &c2, DEFAULT_TOL)
            .unwrap()
            .is_empty());
        assert!(matches!(
            circle_circle_intersect_3d(&c1, &c1, DEFAULT_TOL),
            Err(Error::CoincidentCircles)
        ));
    }

    #[test]
    fn circle_against_sphere() {
        let c = Circle3::new(Vec3::ZERO, 1.0, Vec3::Z).unwrap();
        let s = Sphere::new(Vec3::new(1.0, 0.0, 0.5), 0.5);
        let pts = circle_sphere_intersect(&c, &s, DEFAULT_TOL).unwrap();
        assert_eq!(pts.len(), 1);
        assert_vec_eq(pts[0], Vec3::X, 1e-12);
        let s = Sphere::new(Vec3::new(0.0, 0.0, 0.5), 0.5f64.hypot(1.0));
        assert!(matches!(
            circle_sphere_intersect(&c, &s, DEFAULT_TOL),
            Err(Error::CoincidentCircles)
        ));
    }

    #[test]
    fn rotation_is_right_handed() {
        let q = Vec3::X.rotated_about(&Vec3::Z, std::f64::consts::FRAC_PI_2);
        assert_vec_eq(q, Vec3::Y, 1e-15);
    }

    #[test]
    fn non_finite_vectors_are_rejected_on_parse() {
        assert!(serde_json::from_str::<Vec3>(r#"{"x":1,"y":2,"z":3}"#).is_ok());
        assert!(serde_json::from_str::<Vec3>(r#"{"x":1e999,"y":2,"z":3}"#).is_err());
    }
}
