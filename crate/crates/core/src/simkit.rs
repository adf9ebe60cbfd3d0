//! Synthetic single-anchor UWB measurements.
//!
//! A gesture is a straight segment traversed at constant speed, optionally
//! perturbed by smooth hand tremor. Readings are the exact spherical
//! coordinates of the true path plus
//!
//! * white Gaussian noise per sample on distance, azimuth and elevation,
//! * an angle-of-arrival distortion drawn once per gesture: the azimuth and
//!   elevation offsets from the gesture's centre bearing are mapped through
//!   `I + G` with `G` a random 2x2 matrix. This is the first-order term of a
//!   smooth, incidence-dependent array calibration error; it tilts the
//!   measured path about its centre without moving it, and
//! * optionally, a constant angular bias drawn once per gesture (the
//!   zeroth-order term), which shifts the whole path by `range * bias`.
//!
//! Every random draw comes from a seeded ChaCha stream, so a fixed
//! `(spec, noise, anchor)` triple reproduces bit-identical output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{angle_between, cartesian_to_spherical, wrap_angle, UwbReading, Vec3};
use crate::pointing::{Sample, Trajectory};
use crate::registry::DeviceRecord;
use crate::scalar::{lit, Real};

/// Tremor low-pass cutoff, Hz.
pub const JITTER_CUTOFF_HZ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct NoiseModel<T> {
    /// White distance noise, m.
    pub range_sigma: T,
    /// White azimuth noise, rad.
    pub azimuth_sigma: T,
    /// White elevation noise, rad.
    pub elevation_sigma: T,
    /// Std of each entry of the per-gesture AoA distortion matrix.
    pub aoa_distortion_sigma: T,
    /// Per-gesture constant azimuth/elevation bias, rad.
    #[serde(default)]
    pub aoa_bias_sigma: T,
    pub seed: u64,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        NoiseModel {
            range_sigma: lit(0.008),
            azimuth_sigma: lit::<T>(0.03).to_radians(),
            elevation_sigma: lit::<T>(0.03).to_radians(),
            aoa_distortion_sigma: lit(0.06),
            aoa_bias_sigma: T::zero(),
            seed: 0,
        }
    }
}

impl<T: Real> NoiseModel<T> {
    pub fn noiseless() -> Self {
        NoiseModel {
            range_sigma: T::zero(),
            azimuth_sigma: T::zero(),
            elevation_sigma: T::zero(),
            aoa_distortion_sigma: T::zero(),
            aoa_bias_sigma: T::zero(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Multiplies every standard deviation by `k`.
    pub fn scaled(mut self, k: T) -> Self {
        self.range_sigma = self.range_sigma * k;
        self.azimuth_sigma = self.azimuth_sigma * k;
        self.elevation_sigma = self.elevation_sigma * k;
        self.aoa_distortion_sigma = self.aoa_distortion_sigma * k;
        self.aoa_bias_sigma = self.aoa_bias_sigma * k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v >= T::zero();
        if [
            self.range_sigma,
            self.azimuth_sigma,
            self.elevation_sigma,
            self.aoa_distortion_sigma,
            self.aoa_bias_sigma,
        ]
        .into_iter()
        .all(ok)
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "noise sigmas must be finite and >= 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct GestureSpec<T> {
    pub start: Vec3<T>,
    /// Unit direction of motion.
    pub direction: Vec3<T>,
    /// Path length, m.
    pub displacement: T,
    /// m/s.
    pub speed: T,
    /// RMS perpendicular hand tremor, m.
    pub jitter_amplitude: T,
    /// Hz.
    pub sample_rate: T,
    /// Timestamp of the first sample, s.
    #[serde(default)]
    pub start_time: T,
}

impl<T: Real> GestureSpec<T> {
    /// 20 cm at 0.1 m/s, 55 Hz, 3 mm tremor.
    pub fn new(start: Vec3<T>, direction: Vec3<T>) -> Self {
        GestureSpec {
            start,
            direction,
            displacement: lit(0.2),
            speed: lit(0.1),
            jitter_amplitude: lit(0.003),
            sample_rate: lit(55.0),
            start_time: T::zero(),
        }
    }

    /// Gesture centred on `center` aimed at `target`.
    pub fn toward(center: Vec3<T>, target: Vec3<T>) -> Result<Self> {
        let dir = (target - center).normalized()?;
        let spec = GestureSpec::new(center, dir);
        Ok(GestureSpec {
            start: center - dir * (spec.displacement * lit(0.5)),
            ..spec
        })
    }

    pub fn sample_count(&self) -> usize {
        let n = (self.displacement / self.speed * self.sample_rate)
            .round()
            .to_f64_lossy();
        (n as usize).max(2)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v.is_finite() && v > T::zero();
        if !pos(self.displacement) || !pos(self.speed) || !pos(self.sample_rate) {
            return Err(Error::InvalidParameter(
                "displacement, speed and sample_rate must be > 0".into(),
            ));
        }
        if !(self.jitter_amplitude >= T::zero())
            || !self.start.is_finite()
            || !self.start_time.is_finite()
        {
            return Err(Error::InvalidParameter(
                "invalid gesture start or jitter".into(),
            ));
        }
        if !self.direction.is_unit() {
            return Err(Error::InvalidParameter(
                "gesture direction must be unit-norm".into(),
            ));
        }
        Ok(())
    }
}

/// Anchor at the frame origin looking along `+z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct AnchorModel<T> {
    /// Half-angle of the field-of-view cone around the boresight, rad.
    pub fov_half_angle: T,
    /// Minimum measurable range, m.
    pub min_range: T,
}

impl<T: Real> Default for AnchorModel<T> {
    fn default() -> Self {
        AnchorModel {
            fov_half_angle: lit::<T>(60.0).to_radians(),
            min_range: lit(0.3),
        }
    }
}

impl<T: Real> AnchorModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_half_angle > T::zero() && self.fov_half_angle <= T::FRAC_PI_2()) {
            return Err(Error::InvalidParameter(
                "fov_half_angle must lie in (0, pi/2]".into(),
            ));
        }
        if !(self.min_range >= T::zero()) {
            return Err(Error::InvalidParameter("min_range must be >= 0".into()));
        }
        Ok(())
    }

    pub fn sees(&self, p: Vec3<T>) -> bool {
        let r = p.norm();
        r > self.min_range && angle_between(p / r, Vec3::unit_z()) <= self.fov_half_angle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct SimulatedGesture<T> {
    pub truth: Trajectory<T>,
    pub readings: Vec<UwbReading<T>>,
}

/// Seeded measurement generator. One instance is single-threaded; independent
/// instances can run in parallel.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    pub noise: NoiseModel<T>,
    pub anchor: AnchorModel<T>,
    rng: ChaCha8Rng,
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, sigma: T) -> T
where
    StandardNormal: Distribution<T>,
{
    if sigma == T::zero() {
        // Keep the stream aligned whether or not a component is noisy.
        let _: T = StandardNormal.sample(rng);
        return T::zero();
    }
    Normal::new(T::zero(), sigma)
        .map(|n| n.sample(rng))
        .unwrap_or_else(|_| T::zero())
}

impl<T: Real> Simulator<T>
where
    StandardNormal: Distribution<T>,
{
    pub fn new(noise: NoiseModel<T>, anchor: AnchorModel<T>) -> Self {
        Simulator {
            noise,
            anchor,
            rng: ChaCha8Rng::seed_from_u64(noise.seed),
        }
    }

    /// Simulator on an explicit stream of the noise seed; used to give each
    /// sweep cell an independent, order-free generator.
    pub fn with_stream(noise: NoiseModel<T>, anchor: AnchorModel<T>, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(stream);
        Simulator { noise, anchor, rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// True path: the straight segment plus low-pass tremor in the two axes
    /// perpendicular to the motion.
    pub fn true_path(&mut self, spec: &GestureSpec<T>) -> Result<Trajectory<T>> {
        spec.validate()?;
        let n = spec.sample_count();
        let dt = T::one() / spec.sample_rate;
        let u = spec.direction.any_orthogonal();
        let w = spec.direction.cross(u);

        // First-order low-pass with unit stationary variance.
        let two_pi = T::PI() + T::PI();
        let a = (-two_pi * lit::<T>(JITTER_CUTOFF_HZ) * dt).exp();
        let b = (T::one() - a * a).sqrt();
        let mut ju: T = gaussian(&mut self.rng, T::one());
        let mut jw: T = gaussian(&mut self.rng, T::one());

        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                ju = a * ju + b * gaussian(&mut self.rng, T::one());
                jw = a * jw + b * gaussian(&mut self.rng, T::one());
            }
            let t = lit::<T>(k as f64) * dt;
            let tremor = (u * ju + w * jw) * spec.jitter_amplitude;
            let position = spec.start + spec.direction * (spec.speed * t) + tremor;
            samples.push(Sample {
                timestamp: spec.start_time + t,
                position,
            });
        }
        Trajectory::new(samples)
    }

    /// Ground truth plus noisy readings for one gesture.
    pub fn generate_gesture(&mut self, spec: &GestureSpec<T>) -> Result<SimulatedGesture<T>> {
        self.noise.validate()?;
        self.anchor.validate()?;
        let truth = self.true_path(spec)?;
        if let Some(index) = truth.positions().position(|p| !self.anchor.sees(p)) {
            return Err(Error::OutOfFov { index });
        }
        let bias_az = gaussian(&mut self.rng, self.noise.aoa_bias_sigma);
        let bias_el = gaussian(&mut self.rng, self.noise.aoa_bias_sigma);
        let mut g = [T::zero(); 4];
        for v in g.iter_mut() {
            *v = gaussian(&mut self.rng, self.noise.aoa_distortion_sigma);
        }
        let centre = cartesian_to_spherical(truth.centroid())?;
        let floor = lit::<T>(1e-6);
        let mut readings = Vec::with_capacity(truth.len());
        for s in truth.samples() {
            let exact = cartesian_to_spherical(s.position)?;
            let da = wrap_angle(exact.azimuth - centre.azimuth);
            let de = exact.elevation - centre.elevation;
            let err_az = bias_az + g[0] * da + g[1] * de;
            let err_el = bias_el + g[2] * da + g[3] * de;
            let distance =
                (exact.distance + gaussian(&mut self.rng, self.noise.range_sigma)).max(floor);
            let azimuth = wrap_angle(
                exact.azimuth + err_az + gaussian(&mut self.rng, self.noise.azimuth_sigma),
            );
            let elevation =
                (exact.elevation + err_el + gaussian(&mut self.rng, self.noise.elevation_sigma))
                    .max(-T::FRAC_PI_2())
                    .min(T::FRAC_PI_2());
            readings.push(UwbReading {
                distance,
                azimuth,
                elevation,
                timestamp: s.timestamp,
            });
        }
        Ok(SimulatedGesture { truth, readings })
    }

    /// Per-device ranging and angle-of-arrival feeds for the baseline
    /// selectors. AoA is the angle between `boresight` (the user device's
    /// pointing axis) and the bearing to each device.
    pub fn per_device_series(
        &mut self,
        truth: &Trajectory<T>,
        boresight: Vec3<T>,
        devices: &[DeviceRecord<T>],
    ) -> Result<DeviceFeeds<T>> {
        let mut feeds = DeviceFeeds::default();
        for d in devices {
            let mut dist = Vec::with_capacity(truth.len());
            let mut aoa = Vec::with_capacity(truth.len());
            for (m, s) in truth.samples().iter().enumerate() {
                let v = d.position - s.position;
                let r = v.norm();
                if !(r > lit(1e-6)) {
                    return Err(Error::DegenerateGeometry {
                        sample: m,
                        distance_m: r.to_f64_lossy(),
                    });
                }
                dist.push((
                    s.timestamp,
                    r + gaussian(&mut self.rng, self.noise.range_sigma),
                ));
                let angle = angle_between(boresight, v / r)
                    + gaussian(&mut self.rng, self.noise.azimuth_sigma);
                aoa.push(angle.abs());
            }
            feeds.distance.insert(d.id.clone(), dist);
            feeds.aoa.insert(d.id.clone(), aoa);
        }
        Ok(feeds)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct DeviceFeeds<T> {
    /// `(timestamp, meters)` per device.
    pub distance: BTreeMap<String, Vec<(T, T)>>,
    /// Radians per device.
    pub aoa: BTreeMap<String, Vec<T>>,
}

/// One-shot generation seeded from `noise.seed`.
pub fn generate_gesture<T: Real>(
    spec: &GestureSpec<T>,
    noise: &NoiseModel<T>,
    anchor: &AnchorModel<T>,
) -> Result<SimulatedGesture<T>>
where
    StandardNormal: Distribution<T>,
{
    Simulator::new(*noise, *anchor).generate_gesture(spec)
}

/// Separation two devices need at range `d` to subtend `accuracy` radians,
/// `d tan(accuracy)`.
pub fn theoretical_resolution<T: Real>(d: T, accuracy: T) -> T {
    d * accuracy.tan()
}

/// Splits a reading stream into gestures wherever the smoothed speed exceeds
/// `speed_threshold` (m/s) for at least `min_samples` consecutive samples.
/// Returns half-open index ranges.
pub fn segment_by_speed<T: Real>(
    readings: &[UwbReading<T>],
    speed_threshold: T,
    min_samples: usize,
) -> Result<Vec<std::ops::Range<usize>>> {
    let positions = readings
        .iter()
        .map(crate::geom::spherical_to_cartesian)
        .collect::<Result<Vec<_>>>()?;
    let n = positions.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    // Central differences over a +-2 sample window.
    let half = 2usize;
    let moving: Vec<bool> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            let dt = readings[hi].timestamp - readings[lo].timestamp;
            dt > T::zero() && positions[hi].distance(positions[lo]) / dt > speed_threshold
        })
        .collect();
    let mut out = Vec::new();
    let mut start = None;
    for (k, &m) in moving.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if k - s >= min_samples {
                    out.push(s..k);
                }
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}
