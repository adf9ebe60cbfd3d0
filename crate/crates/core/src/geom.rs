//! Anchor-frame geometry.
//!
//! The anchor frame has `z` along the anchor boresight, `y` up and `x` to the
//! right. A reading `(d, azimuth, elevation)` maps to
//! `(d cos(el) sin(az), d sin(el), d cos(el) cos(az))`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Vec3::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Vec3::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Vec3::new(T::zero(), T::zero(), T::one())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        // hypot-style scaling keeps tiny and huge vectors accurate.
        let m = self.x.abs().max(self.y.abs()).max(self.z.abs());
        if m == T::zero() || !m.is_finite() {
            return m;
        }
        let s = self / m;
        m * s.norm_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `DegeneratePosition` for a zero
    /// (or non-finite) vector.
    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::DegeneratePosition);
        }
        Ok(self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - T::one()).abs() <= lit::<T>(1e-9).max(T::epsilon() * lit(16.0))
    }

    /// Some unit vector orthogonal to `self` (which need not be unit).
    pub fn any_orthogonal(self) -> Self {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::unit_x()
        } else if self.y.abs() <= self.z.abs() {
            Vec3::unit_y()
        } else {
            Vec3::unit_z()
        };
        let c = self.cross(a);
        c / c.norm()
    }

    /// Rodrigues rotation of `self` by `angle` radians about the unit `axis`.
    pub fn rotated_about(self, axis: Self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (T::one() - c))
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn max_abs_diff(self, o: Self) -> T {
        let d = self - o;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            lit(self.x.to_f64_lossy()),
            lit(self.y.to_f64_lossy()),
            lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> std::iter::Sum for Vec3<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Vec3::zero(), Add::add)
    }
}

/// One anchor measurement of the user device. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct UwbReading<T> {
    pub distance: T,
    pub azimuth: T,
    pub elevation: T,
    pub timestamp: T,
}

impl<T: Real> UwbReading<T> {
    /// Validated constructor. Azimuth must lie in `(-pi, pi]`, elevation in
    /// `[-pi/2, pi/2]`.
    pub fn new(distance: T, azimuth: T, elevation: T, timestamp: T) -> Result<Self> {
        let r = UwbReading {
            distance,
            azimuth,
            elevation,
            timestamp,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.distance.is_finite() || self.distance <= T::zero() {
            return Err(Error::InvalidReading(format!(
                "distance {} must be finite and > 0",
                self.distance
            )));
        }
        if !self.azimuth.is_finite() || self.azimuth <= -T::PI() || self.azimuth > T::PI() {
            return Err(Error::InvalidReading(format!(
                "azimuth {} outside (-pi, pi]",
                self.azimuth
            )));
        }
        if !self.elevation.is_finite() || self.elevation.abs() > T::FRAC_PI_2() {
            return Err(Error::InvalidReading(format!(
                "elevation {} outside [-pi/2, pi/2]",
                self.elevation
            )));
        }
        if !self.timestamp.is_finite() {
            return Err(Error::InvalidReading("timestamp must be finite".into()));
        }
        Ok(())
    }

    pub fn with_timestamp(mut self, t: T) -> Self {
        self.timestamp = t;
        self
    }
}

/// Half-line `origin + t * direction`, `direction` unit-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub direction: Vec3<T>,
}

impl<T: Real> Ray<T> {
    /// Normalizes `direction`; fails on a zero direction.
    pub fn new(origin: Vec3<T>, direction: Vec3<T>) -> Result<Self> {
        Ok(Ray {
            origin,
            direction: direction.normalized()?,
        })
    }

    /// Ray from `origin` through `target`.
    pub fn through(origin: Vec3<T>, target: Vec3<T>) -> Result<Self> {
        Ray::new(origin, target - origin)
    }

    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.direction * t
    }

    /// Distance from `p` to the infinite line carrying the ray.
    pub fn distance_to_line(&self, p: Vec3<T>) -> T {
        let v = p - self.origin;
        (v - self.direction * v.dot(self.direction)).norm()
    }
}

/// Solution of the two-line nearest-point problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct NearestPoint<T> {
    /// Midpoint of the common perpendicular.
    pub point: Vec3<T>,
    pub t1: T,
    pub t2: T,
    /// Length of the common perpendicular, meters.
    pub gap: T,
}

/// Threshold on `|n1 x n2|` below which two directions count as parallel.
pub fn parallel_tolerance<T: Real>() -> T {
    lit::<T>(1e-9).max(T::epsilon() * lit(16.0))
}

pub fn spherical_to_cartesian<T: Real>(r: &UwbReading<T>) -> Result<Vec3<T>> {
    if !r.distance.is_finite() || r.distance <= T::zero() {
        return Err(Error::InvalidReading(format!(
            "distance {} must be finite and > 0",
            r.distance
        )));
    }
    if !r.azimuth.is_finite() || !r.elevation.is_finite() {
        return Err(Error::InvalidReading("non-finite angle".into()));
    }
    let (sa, ca) = r.azimuth.sin_cos();
    let (se, ce) = r.elevation.sin_cos();
    let d = r.distance;
    Ok(Vec3::new(d * ce * sa, d * se, d * ce * ca))
}

/// Inverse of [`spherical_to_cartesian`]; the timestamp is left at zero.
pub fn cartesian_to_spherical<T: Real>(p: Vec3<T>) -> Result<UwbReading<T>> {
    if !p.is_finite() {
        return Err(Error::InvalidReading("non-finite position".into()));
    }
    let d = p.norm();
    if d == T::zero() {
        return Err(Error::DegeneratePosition);
    }
    let mut azimuth = p.x.atan2(p.z);
    if azimuth <= -T::PI() {
        azimuth = T::PI();
    }
    // atan2 against the horizontal range is better conditioned than asin near the poles.
    let horizontal = (p.x * p.x + p.z * p.z).sqrt();
    let elevation = p.y.atan2(horizontal);
    Ok(UwbReading {
        distance: d,
        azimuth,
        elevation,
        timestamp: T::zero(),
    })
}

/// Least-squares nearest point of two lines `a.origin + t1 a.dir` and
/// `b.origin + t2 b.dir`.
///
/// Solves `[t1; t2] = (MᵀM)⁻¹ MᵀB` with `M = [n1, -n2]` and
/// `B = b.origin - a.origin`, then returns the midpoint of the two foot points.
pub fn nearest_point_between_rays<T: Real>(a: &Ray<T>, b: &Ray<T>) -> Result<NearestPoint<T>> {
    let n1 = a.direction;
    let n2 = b.direction;
    let cross_norm = n1.cross(n2).norm();
    if !(cross_norm > parallel_tolerance::<T>()) {
        return Err(Error::ParallelRays {
            cross_norm: cross_norm.to_f64_lossy(),
        });
    }
    let rhs = b.origin - a.origin;

    // Normal equations: [[n1.n1, -n1.n2], [-n1.n2, n2.n2]] [t1; t2] = [n1.B; -n2.B]
    let a11 = n1.dot(n1);
    let a12 = -n1.dot(n2);
    let a22 = n2.dot(n2);
    let b1 = n1.dot(rhs);
    let b2 = -n2.dot(rhs);
    let det = a11 * a22 - a12 * a12;
    let t1 = (a22 * b1 - a12 * b2) / det;
    let t2 = (a11 * b2 - a12 * b1) / det;

    let p1 = a.at(t1);
    let p2 = b.at(t2);
    Ok(NearestPoint {
        point: (p1 + p2) * lit(0.5),
        t1,
        t2,
        gap: p1.distance(p2),
    })
}

/// Angle in `[0, pi]` between two unit vectors.
pub fn angle_between<T: Real>(u: Vec3<T>, v: Vec3<T>) -> T {
    // atan2 keeps full precision for nearly parallel vectors, where acos does not.
    u.cross(v).norm().atan2(u.dot(v))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = a % two_pi;
    if w > T::PI() {
        w = w - two_pi;
    } else if w <= -T::PI() {
        w = w + two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn reading(d: f64, az: f64, el: f64) -> UwbReading<f64> {
        UwbReading::new(d, az, el, 0.0).unwrap()
    }

    fn assert_vec(a: Vec3<f64>, b: Vec3<f64>, tol: f64) {
        assert!(a.max_abs_diff(b) < tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn spherical_examples() {
        assert_vec(
            spherical_to_cartesian(&reading(5.0, 0.0, 0.0)).unwrap(),
            v(0.0, 0.0, 5.0),
            1e-12,
        );
        assert_vec(
            spherical_to_cartesian(&reading(2.0, 0.0, FRAC_PI_2)).unwrap(),
            v(0.0, 2.0, 0.0),
            1e-12,
        );
        assert_vec(
            spherical_to_cartesian(&reading(1.0, FRAC_PI_2, 0.0)).unwrap(),
            v(1.0, 0.0, 0.0),
            1e-12,
        );
    }

    #[test]
    fn spherical_rejects_bad_distance() {
        let bad = UwbReading {
            distance: 0.0,
            azimuth: 0.0,
            elevation: 0.0,
            timestamp: 0.0,
        };
        assert!(matches!(
            spherical_to_cartesian(&bad),
            Err(Error::InvalidReading(_))
        ));
        let nan = UwbReading {
            distance: f64::NAN,
            ..bad
        };
        assert!(matches!(
            spherical_to_cartesian(&nan),
            Err(Error::InvalidReading(_))
        ));
        assert!(UwbReading::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(UwbReading::new(1.0, -PI, 0.0, 0.0).is_err());
        assert!(UwbReading::new(1.0, PI, 0.0, 0.0).is_ok());
        assert!(UwbReading::new(1.0, 0.0, 1.6, 0.0).is_err());
    }

    #[test]
    fn cartesian_examples() {
        let r = cartesian_to_spherical(v(0.0, 0.0, 5.0)).unwrap();
        assert_abs_diff_eq!(r.distance, 5.0);
        assert_abs_diff_eq!(r.azimuth, 0.0);
        assert_abs_diff_eq!(r.elevation, 0.0);
        let r = cartesian_to_spherical(v(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.distance, 1.0);
        assert_abs_diff_eq!(r.azimuth, FRAC_PI_2);
        assert_eq!(
            cartesian_to_spherical(v(0.0, 0.0, 0.0)),
            Err(Error::DegeneratePosition)
        );
    }

    #[test]
    fn azimuth_stays_in_half_open_range() {
        let r = cartesian_to_spherical(v(-0.0, 0.0, -2.0)).unwrap();
        assert_eq!(r.azimuth, PI);
        r.validate().unwrap();
    }

    #[test]
    fn intersecting_rays() {
        let a = Ray::new(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).unwrap();
        let b = Ray::new(v(2.0, -1.0, 0.0), v(0.0, 1.0, 0.0)).unwrap();
        let s = nearest_point_between_rays(&a, &b).unwrap();
        assert_vec(s.point, v(2.0, 0.0, 0.0), 1e-12);
        assert_abs_diff_eq!(s.gap, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.t1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.t2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn skew_rays_against_grid_oracle() {
        let a = Ray::new(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).unwrap();
        let b = Ray::new(v(0.0, 1.0, 0.0), v(0.0, 0.0, 1.0)).unwrap();
        // Brute force squared gap over t1, t2 in [-10, 10] at step 1e-3 is
        // separable here: |p1-p2|^2 = t1^2 + 1 + t2^2, minimised at the grid
        // point (0, 0) with gap 1 and midpoint (0, 0.5, 0).
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -10_000..=10_000 {
            let t = i as f64 * 1e-3;
            let g1 = a.at(t) - b.origin;
            let c = g1.norm_squared();
            if c < best.0 {
                best = (c, t, 0.0);
            }
        }
        let s = nearest_point_between_rays(&a, &b).unwrap();
        assert!((s.t1 - best.1).abs() <= 1e-3);
        assert_vec(s.point, v(0.0, 0.5, 0.0), 1e-12);
        assert_abs_diff_eq!(s.gap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn recovers_shared_point_at_half_degree() {
        let q = v(0.7, -0.2, 3.1);
        let d = v(0.3, 0.1, 1.0).normalized().unwrap();
        let axis = d.any_orthogonal();
        let d2 = d.rotated_about(axis, 0.5f64.to_radians());
        let a = Ray::new(q - d * 2.0, d).unwrap();
        let b = Ray::new(q - d2 * 1.5, d2).unwrap();
        let s = nearest_point_between_rays(&a, &b).unwrap();
        assert!(s.point.distance(q) < 1e-6);
    }

    #[test]
    fn parallel_rays_are_rejected() {
        let a = Ray::new(v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)).unwrap();
        let b = Ray::new(v(0.0, 1.0, 0.0), v(-1.0, 0.0, 0.0)).unwrap();
        assert!(matches!(
            nearest_point_between_rays(&a, &b),
            Err(Error::ParallelRays { .. })
        ));
    }

    #[test]
    fn angle_examples() {
        assert_abs_diff_eq!(angle_between(v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)), FRAC_PI_2);
        assert_eq!(angle_between(v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)), 0.0);
        assert_abs_diff_eq!(angle_between(v(1.0, 0.0, 0.0), v(-1.0, 0.0, 0.0)), PI);
    }

    #[test]
    fn wrap_examples() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(0.5), 0.5);
    }

    #[test]
    fn works_in_single_precision() {
        let r = UwbReading::new(5.0f32, 0.3, -0.2, 0.0).unwrap();
        let p = spherical_to_cartesian(&r).unwrap();
        let back = cartesian_to_spherical(p).unwrap();
        assert!((back.distance - 5.0).abs() < 1e-5);
        assert!((back.azimuth - 0.3).abs() < 1e-5);
    }
}
