//! Device registration by pointing twice, plus the device catalog.
//!
//! A device lies near the intersection of two pointing rays taken from
//! different user positions; the nearest point between the two lines is used
//! as its position. Registration refuses geometry that is too weak and
//! returns [`Guidance`] instead, so a UI can prompt the user.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_between, nearest_point_between_rays, NearestPoint, Ray, Vec3};
use crate::pointing::{GestureLimits, PointingRay};
use crate::scalar::{lit, Real};

/// Slack applied to inclusive thresholds so that values constructed exactly at
/// the boundary are not rejected by rounding.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct DeviceRecord<T> {
    pub id: String,
    pub label: String,
    pub position: Vec3<T>,
    pub registered_at: T,
    /// Length of the common perpendicular between the two rays, m.
    pub registration_gap: T,
    /// Angle between the two pointing directions, rad.
    pub registration_angle: T,
}

/// Two pointing gestures at the same device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct RegistrationAttempt<T> {
    pub ray1: PointingRay<T>,
    pub ray2: PointingRay<T>,
}

impl<T: Real> RegistrationAttempt<T> {
    pub fn new(ray1: PointingRay<T>, ray2: PointingRay<T>) -> Self {
        RegistrationAttempt { ray1, ray2 }
    }

    pub fn rays(&self) -> (Ray<T>, Ray<T>) {
        (self.ray1.as_ray(), self.ray2.as_ray())
    }

    pub fn angle(&self) -> T {
        angle_between(self.ray1.direction, self.ray2.direction)
    }

    /// Nearest point between the two rays, with `t1`, `t2`.
    pub fn solve(&self) -> Result<NearestPoint<T>> {
        let (a, b) = self.rays();
        nearest_point_between_rays(&a, &b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct RegistrationPolicy<T> {
    /// Minimum angle between the two pointing directions, rad, inclusive.
    pub min_angle: T,
    /// Minimum distance between the two user positions, m, inclusive.
    pub min_separation: T,
    /// Perturbation spread above which a registration is unstable, m.
    pub instability_threshold: T,
    pub limits: GestureLimits<T>,
}

impl<T: Real> Default for RegistrationPolicy<T> {
    fn default() -> Self {
        RegistrationPolicy {
            min_angle: lit::<T>(20.0).to_radians(),
            min_separation: lit(1.4),
            instability_threshold: lit(0.5),
            limits: GestureLimits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hint {
    MoveFarther,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub enum GuidanceReason<T> {
    /// Pointing directions closer than the minimum angle (rad).
    AngleTooSmall {
        angle: T,
        min_angle: T,
    },
    /// User positions closer than the minimum separation (m).
    SeparationTooSmall {
        separation: T,
        min_separation: T,
    },
    ParallelRays,
}

/// Non-error outcome asking the user to repeat the second gesture elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Guidance<T> {
    pub reason: GuidanceReason<T>,
    pub hint: Hint,
}

impl<T> Guidance<T> {
    fn move_farther(reason: GuidanceReason<T>) -> Self {
        Guidance {
            reason,
            hint: Hint::MoveFarther,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub enum RegistrationOutcome<T> {
    Registered(DeviceRecord<T>),
    GuidanceNeeded(Guidance<T>),
}

impl<T> RegistrationOutcome<T> {
    pub fn record(&self) -> Option<&DeviceRecord<T>> {
        match self {
            RegistrationOutcome::Registered(r) => Some(r),
            RegistrationOutcome::GuidanceNeeded(_) => None,
        }
    }
}

/// Geometry of an accepted registration before it gets an id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationFix<T> {
    pub position: Vec3<T>,
    pub gap: T,
    pub angle: T,
}

fn check_ray<T: Real>(ray: &PointingRay<T>, limits: &GestureLimits<T>) -> Result<()> {
    if ray.samples.len() < limits.min_samples {
        return Err(Error::InsufficientData {
            got: ray.samples.len(),
            need: limits.min_samples,
        });
    }
    if ray.net_displacement < limits.min_displacement {
        return Err(Error::GestureTooShort {
            displacement_m: ray.net_displacement.to_f64_lossy(),
            floor_m: limits.min_displacement.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Triangulates a device from two gestures without touching any catalog.
///
/// Hard gesture-quality failures are errors; weak geometry (angle below the
/// policy minimum, parallel rays) is returned as guidance.
pub fn locate_device<T: Real>(
    attempt: &RegistrationAttempt<T>,
    policy: &RegistrationPolicy<T>,
) -> Result<std::result::Result<RegistrationFix<T>, Guidance<T>>> {
    check_ray(&attempt.ray1, &policy.limits)?;
    check_ray(&attempt.ray2, &policy.limits)?;
    let angle = attempt.angle();
    if angle < policy.min_angle - lit(BOUNDARY_SLACK) {
        return Ok(Err(Guidance::move_farther(GuidanceReason::AngleTooSmall {
            angle,
            min_angle: policy.min_angle,
        })));
    }
    match attempt.solve() {
        Ok(sol) => Ok(Ok(RegistrationFix {
            position: sol.point,
            gap: sol.gap,
            angle,
        })),
        Err(Error::ParallelRays { .. }) => {
            Ok(Err(Guidance::move_farther(GuidanceReason::ParallelRays)))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SeparationCheck<T> {
    Ok,
    MoveFarther { separation: T, min_separation: T },
}

/// `MoveFarther` iff the two user positions are closer than 1.4 m.
pub fn user_separation_check<T: Real>(p1: Vec3<T>, p2: Vec3<T>) -> SeparationCheck<T> {
    user_separation_check_with(p1, p2, lit(1.4))
}

pub fn user_separation_check_with<T: Real>(
    p1: Vec3<T>,
    p2: Vec3<T>,
    min_separation: T,
) -> SeparationCheck<T> {
    let separation = p1.distance(p2);
    if separation < min_separation - lit(BOUNDARY_SLACK) {
        SeparationCheck::MoveFarther {
            separation,
            min_separation,
        }
    } else {
        SeparationCheck::Ok
    }
}

impl<T> SeparationCheck<T> {
    pub fn guidance(self) -> Option<Guidance<T>> {
        match self {
            SeparationCheck::Ok => None,
            SeparationCheck::MoveFarther {
                separation,
                min_separation,
            } => Some(Guidance::move_farther(GuidanceReason::SeparationTooSmall {
                separation,
                min_separation,
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Sensitivity<T> {
    /// RMS distance of perturbed solutions from the unperturbed one, m.
    pub spread: T,
    /// Trials that produced a solution.
    pub solved: usize,
    /// Trials skipped because the perturbed rays were parallel.
    pub skipped: usize,
}

impl<T: Real> Sensitivity<T> {
    pub fn is_unstable(&self, threshold: T) -> bool {
        self.spread > threshold
    }
}

/// Rotates `dir` by an angle drawn uniformly from `[0, max_angle]` about a
/// uniformly random axis perpendicular to it.
pub fn perturb_direction<T: Real, R: Rng + ?Sized>(
    dir: Vec3<T>,
    max_angle: T,
    rng: &mut R,
) -> Vec3<T> {
    if max_angle == T::zero() {
        return dir;
    }
    let u = dir.any_orthogonal();
    let w = dir.cross(u);
    let phi = lit::<T>(rng.random::<f64>()) * (T::PI() + T::PI());
    let axis = u * phi.cos() + w * phi.sin();
    let angle = lit::<T>(rng.random::<f64>()) * max_angle;
    dir.rotated_about(axis, angle)
}

/// Re-solves the attempt `trials` times with both directions independently
/// perturbed by up to `max_angle`.
pub fn perturbation_sensitivity<T: Real, R: Rng + ?Sized>(
    attempt: &RegistrationAttempt<T>,
    max_angle: T,
    trials: usize,
    rng: &mut R,
) -> Result<Sensitivity<T>> {
    let base = attempt.solve()?.point;
    let (a, b) = attempt.rays();
    let mut sum_sq = T::zero();
    let mut solved = 0;
    let mut skipped = 0;
    for _ in 0..trials {
        let pa = Ray {
            origin: a.origin,
            direction: perturb_direction(a.direction, max_angle, rng),
        };
        let pb = Ray {
            origin: b.origin,
            direction: perturb_direction(b.direction, max_angle, rng),
        };
        match nearest_point_between_rays(&pa, &pb) {
            Ok(sol) => {
                sum_sq = sum_sq + (sol.point - base).norm_squared();
                solved += 1;
            }
            Err(Error::ParallelRays { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let spread = if solved > 0 {
        (sum_sq / lit(solved as f64)).sqrt()
    } else {
        T::zero()
    };
    Ok(Sensitivity {
        spread,
        solved,
        skipped,
    })
}

/// Devices known to one scenario. Ids are unique; mutation requires `&mut`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
#[serde(try_from = "Vec<DeviceRecord<T>>", into = "Vec<DeviceRecord<T>>")]
pub struct Catalog<T> {
    records: Vec<DeviceRecord<T>>,
}

impl<T: Real> TryFrom<Vec<DeviceRecord<T>>> for Catalog<T> {
    type Error = Error;
    fn try_from(records: Vec<DeviceRecord<T>>) -> Result<Self> {
        Catalog::from_records(records)
    }
}

impl<T: Real> From<Catalog<T>> for Vec<DeviceRecord<T>> {
    fn from(c: Catalog<T>) -> Self {
        c.records
    }
}

impl<T: Real> Catalog<T> {
    pub fn new() -> Self {
        Catalog {
            records: Vec::new(),
        }
    }

    pub fn from_records(records: Vec<DeviceRecord<T>>) -> Result<Self> {
        let mut c = Catalog::new();
        for r in records {
            c.insert(r)?;
        }
        Ok(c)
    }

    pub fn list(&self) -> &[DeviceRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&DeviceRecord<T>> {
        self.records
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::NotFound(id.to_string()))
    }

    /// Adds a record with a caller-chosen id.
    pub fn insert(&mut self, record: DeviceRecord<T>) -> Result<()> {
        if self.records.iter().any(|r| r.id == record.id) {
            return Err(Error::DuplicateId(record.id));
        }
        if !record.position.is_finite() || !(record.registration_gap >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "invalid record {:?}",
                record.id
            )));
        }
        self.records.push(record);
        Ok(())
    }

    fn next_id(&self) -> String {
        (self.records.len() + 1..)
            .map(|n| format!("dev-{n:04}"))
            .find(|id| self.records.iter().all(|r| &r.id != id))
            .expect("unbounded id space")
    }

    /// Registers a new device from two gestures; stores it only on success.
    pub fn register(
        &mut self,
        label: &str,
        attempt: &RegistrationAttempt<T>,
        policy: &RegistrationPolicy<T>,
        registered_at: T,
    ) -> Result<RegistrationOutcome<T>> {
        match locate_device(attempt, policy)? {
            Err(g) => Ok(RegistrationOutcome::GuidanceNeeded(g)),
            Ok(fix) => {
                let record = DeviceRecord {
                    id: self.next_id(),
                    label: label.to_string(),
                    position: fix.position,
                    registered_at,
                    registration_gap: fix.gap,
                    registration_angle: fix.angle,
                };
                self.records.push(record.clone());
                Ok(RegistrationOutcome::Registered(record))
            }
        }
    }

    /// Replaces the position of `id` from a fresh attempt; the id and label are
    /// kept. Guidance leaves the record untouched.
    pub fn update(
        &mut self,
        id: &str,
        attempt: &RegistrationAttempt<T>,
        policy: &RegistrationPolicy<T>,
        registered_at: T,
    ) -> Result<RegistrationOutcome<T>> {
        let idx = self
            .records
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::NotFound(id.to_string()))?;
        match locate_device(attempt, policy)? {
            Err(g) => Ok(RegistrationOutcome::GuidanceNeeded(g)),
            Ok(fix) => {
                let r = &mut self.records[idx];
                r.position = fix.position;
                r.registration_gap = fix.gap;
                r.registration_angle = fix.angle;
                r.registered_at = registered_at;
                Ok(RegistrationOutcome::Registered(r.clone()))
            }
        }
    }

    pub fn remove(&mut self, id: &str) -> Result<DeviceRecord<T>> {
        let idx = self
            .records
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::NotFound(id.to_string()))?;
        Ok(self.records.remove(idx))
    }
}
