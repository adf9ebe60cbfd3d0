//! Pointing-direction estimation: Kalman smoothing of the localized
//! trajectory followed by principal-component extraction.

use serde::{Deserialize, Serialize};

use crate::eigen::Sym3;
use crate::error::{Error, Result};
use crate::geom::{spherical_to_cartesian, Ray, UwbReading, Vec3};
use crate::kalman::{ConstantVelocityFilter, KalmanConfig};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Sample<T> {
    pub timestamp: T,
    pub position: Vec3<T>,
}

/// Time-ordered positions of the user device during one gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
#[serde(try_from = "Vec<Sample<T>>", into = "Vec<Sample<T>>")]
pub struct Trajectory<T> {
    samples: Vec<Sample<T>>,
}

impl<T: Real> TryFrom<Vec<Sample<T>>> for Trajectory<T> {
    type Error = Error;
    fn try_from(samples: Vec<Sample<T>>) -> Result<Self> {
        Trajectory::new(samples)
    }
}

impl<T> From<Trajectory<T>> for Vec<Sample<T>> {
    fn from(t: Trajectory<T>) -> Self {
        t.samples
    }
}

impl<T: Real> Trajectory<T> {
    /// Fails unless timestamps are strictly increasing and positions finite.
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !s.position.is_finite() || !s.timestamp.is_finite() {
                return Err(Error::InvalidReading(format!("non-finite sample {i}")));
            }
            if i > 0 && !(s.timestamp > samples[i - 1].timestamp) {
                return Err(Error::Ordering { index: i });
            }
        }
        Ok(Trajectory { samples })
    }

    pub fn from_positions(timestamps: &[T], positions: &[Vec3<T>]) -> Result<Self> {
        if timestamps.len() != positions.len() {
            return Err(Error::InvalidParameter(
                "timestamp/position length mismatch".into(),
            ));
        }
        Trajectory::new(
            timestamps
                .iter()
                .zip(positions)
                .map(|(&timestamp, &position)| Sample {
                    timestamp,
                    position,
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = Vec3<T>> + '_ {
        self.samples.iter().map(|s| s.position)
    }

    pub fn centroid(&self) -> Vec3<T> {
        let n = lit::<T>(self.samples.len() as f64);
        self.positions().sum::<Vec3<T>>() / n
    }

    /// `p(M) - p(1)`, zero for fewer than two samples.
    pub fn net_vector(&self) -> Vec3<T> {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.position - a.position,
            _ => Vec3::zero(),
        }
    }

    pub fn duration(&self) -> T {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => T::zero(),
        }
    }

    /// Same samples in reverse temporal order (timestamps mirrored so they
    /// stay increasing).
    pub fn reversed(&self) -> Self {
        let t_end = self
            .samples
            .last()
            .map(|s| s.timestamp)
            .unwrap_or_else(T::zero);
        let t_start = self
            .samples
            .first()
            .map(|s| s.timestamp)
            .unwrap_or_else(T::zero);
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| Sample {
                timestamp: t_start + t_end - s.timestamp,
                position: s.position,
            })
            .collect();
        Trajectory { samples }
    }
}

/// Gesture acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct GestureLimits<T> {
    pub min_samples: usize,
    /// Hard floor on net displacement, m.
    pub min_displacement: T,
    /// Below this net displacement the gesture is flagged too short, m.
    pub warn_displacement: T,
    /// Below this explained-variance ratio the gesture is flagged non-linear.
    pub min_linearity: T,
}

impl<T: Real> Default for GestureLimits<T> {
    fn default() -> Self {
        GestureLimits {
            min_samples: 8,
            min_displacement: lit(0.03),
            warn_displacement: lit(0.10),
            min_linearity: lit(0.9),
        }
    }
}

/// An estimated pointing gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct PointingRay<T> {
    /// Unit pointing direction (first principal component, oriented along
    /// the motion).
    pub direction: Vec3<T>,
    /// Smoothed sample positions.
    pub samples: Trajectory<T>,
    pub net_displacement: T,
    pub mean_speed: T,
    /// `λ1 / (λ1 + λ2 + λ3)` of the sample covariance.
    pub explained_variance_ratio: T,
}

impl<T: Real> PointingRay<T> {
    /// Mean of the smoothed sample positions.
    pub fn origin(&self) -> Vec3<T> {
        self.samples.centroid()
    }

    pub fn as_ray(&self) -> Ray<T> {
        Ray {
            origin: self.origin(),
            direction: self.direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QualityReport {
    pub too_short: bool,
    pub too_few_samples: bool,
    pub low_linearity: bool,
}

impl QualityReport {
    pub fn is_clean(&self) -> bool {
        !(self.too_short || self.too_few_samples || self.low_linearity)
    }

    pub fn flag_names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.too_short {
            v.push("too_short");
        }
        if self.too_few_samples {
            v.push("too_few_samples");
        }
        if self.low_linearity {
            v.push("low_linearity");
        }
        v
    }
}

/// Converts readings to anchor-frame positions and runs the constant-velocity
/// filter over them, one output sample per reading.
pub fn smooth_trajectory<T: Real>(
    readings: &[UwbReading<T>],
    cfg: &KalmanConfig<T>,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if readings.len() < 2 {
        return Err(Error::InsufficientData {
            got: readings.len(),
            need: 2,
        });
    }
    for i in 1..readings.len() {
        if !(readings[i].timestamp > readings[i - 1].timestamp) {
            return Err(Error::Ordering { index: i });
        }
    }
    let measured = readings
        .iter()
        .map(spherical_to_cartesian)
        .collect::<Result<Vec<_>>>()?;

    let mut filter = ConstantVelocityFilter::new(*cfg, readings[0].timestamp, measured[0]);
    let mut samples = Vec::with_capacity(readings.len());
    samples.push(Sample {
        timestamp: readings[0].timestamp,
        position: filter.position(),
    });
    for (r, z) in readings.iter().zip(&measured).skip(1) {
        let position = filter.update(r.timestamp, *z);
        samples.push(Sample {
            timestamp: r.timestamp,
            position,
        });
    }
    Trajectory::new(samples)
}

pub fn estimate_direction<T: Real>(traj: &Trajectory<T>) -> Result<PointingRay<T>> {
    estimate_direction_with(traj, &GestureLimits::default())
}

/// Principal direction of the mean-centred samples, signed so that it agrees
/// with the net displacement `p(M) - p(1)`.
pub fn estimate_direction_with<T: Real>(
    traj: &Trajectory<T>,
    limits: &GestureLimits<T>,
) -> Result<PointingRay<T>> {
    let m = traj.len();
    if m < limits.min_samples.max(2) {
        return Err(Error::InsufficientData {
            got: m,
            need: limits.min_samples.max(2),
        });
    }
    let net = traj.net_vector();
    let net_displacement = net.norm();
    if net_displacement < limits.min_displacement {
        return Err(Error::GestureTooShort {
            displacement_m: net_displacement.to_f64_lossy(),
            floor_m: limits.min_displacement.to_f64_lossy(),
        });
    }

    let centroid = traj.centroid();
    let mut cov = Sym3::zero();
    for p in traj.positions() {
        cov.add_outer(p - centroid);
    }
    let eig = cov.eigen();
    let mut direction = eig.vectors[0];
    if direction.dot(net) < T::zero() {
        direction = -direction;
    }
    let values = eig.values.map(|v| v.max(T::zero()));
    let total = values[0] + values[1] + values[2];
    let explained_variance_ratio = if total > T::zero() {
        values[0] / total
    } else {
        T::zero()
    };

    let duration = traj.duration();
    let mean_speed = if duration > T::zero() {
        net_displacement / duration
    } else {
        T::zero()
    };

    Ok(PointingRay {
        direction,
        samples: traj.clone(),
        net_displacement,
        mean_speed,
        explained_variance_ratio,
    })
}

pub fn gesture_quality<T: Real>(ray: &PointingRay<T>) -> QualityReport {
    gesture_quality_with(ray, &GestureLimits::default())
}

pub fn gesture_quality_with<T: Real>(
    ray: &PointingRay<T>,
    limits: &GestureLimits<T>,
) -> QualityReport {
    QualityReport {
        too_short: ray.net_displacement < limits.warn_displacement,
        too_few_samples: ray.samples.len() < limits.min_samples,
        low_linearity: !(ray.explained_variance_ratio >= limits.min_linearity),
    }
}

/// Smoothing and PCA in one call.
pub fn estimate_from_readings<T: Real>(
    readings: &[UwbReading<T>],
    cfg: &KalmanConfig<T>,
) -> Result<PointingRay<T>> {
    estimate_direction(&smooth_trajectory(readings, cfg)?)
}
