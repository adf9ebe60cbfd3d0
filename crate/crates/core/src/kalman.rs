//! Constant-velocity Kalman filter over anchor-frame positions.
//!
//! The state is position and velocity in three axes. With isotropic
//! measurement and process noise the 6x6 covariance stays block diagonal with
//! one identical 2x2 block per axis, so a single shared block is propagated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::{lit, Real};

/// Prior standard deviation of the initial velocity, m/s.
const INITIAL_VELOCITY_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct KalmanConfig<T> {
    /// White acceleration noise density, m/s².
    pub process_noise_accel: T,
    /// Per-axis position measurement noise, m.
    pub measurement_noise: T,
}

impl<T: Real> Default for KalmanConfig<T> {
    fn default() -> Self {
        KalmanConfig {
            process_noise_accel: lit(0.5),
            measurement_noise: lit(0.05),
        }
    }
}

impl<T: Real> KalmanConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if !ok(self.process_noise_accel) || !ok(self.measurement_noise) {
            return Err(Error::InvalidParameter(
                "Kalman noise parameters must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ConstantVelocityFilter<T> {
    cfg: KalmanConfig<T>,
    position: Vec3<T>,
    velocity: Vec3<T>,
    // Shared per-axis covariance [[pp, pv], [pv, vv]].
    pp: T,
    pv: T,
    vv: T,
    last_t: T,
}

impl<T: Real> ConstantVelocityFilter<T> {
    /// Starts at `z0` with zero velocity.
    pub fn new(cfg: KalmanConfig<T>, t0: T, z0: Vec3<T>) -> Self {
        let r = cfg.measurement_noise;
        let sv = lit::<T>(INITIAL_VELOCITY_SIGMA);
        ConstantVelocityFilter {
            cfg,
            position: z0,
            velocity: Vec3::zero(),
            pp: r * r,
            pv: T::zero(),
            vv: sv * sv,
            last_t: t0,
        }
    }

    pub fn position(&self) -> Vec3<T> {
        self.position
    }

    pub fn velocity(&self) -> Vec3<T> {
        self.velocity
    }

    /// Predict to time `t` and fuse measurement `z`. `t` must exceed the
    /// previous timestamp.
    pub fn update(&mut self, t: T, z: Vec3<T>) -> Vec3<T> {
        let dt = t - self.last_t;
        self.last_t = t;

        let q = self.cfg.process_noise_accel * self.cfg.process_noise_accel;
        let dt2 = dt * dt;
        let half = lit::<T>(0.5);
        let quarter = lit::<T>(0.25);

        // predict
        self.position = self.position + self.velocity * dt;
        let pp = self.pp + (self.pv + self.pv) * dt + self.vv * dt2 + q * quarter * dt2 * dt2;
        let pv = self.pv + self.vv * dt + q * half * dt2 * dt;
        let vv = self.vv + q * dt2;

        // correct
        let r = self.cfg.measurement_noise * self.cfg.measurement_noise;
        let s = pp + r;
        let kp = pp / s;
        let kv = pv / s;
        let innovation = z - self.position;
        self.position = self.position + innovation * kp;
        self.velocity = self.velocity + innovation * kv;

        self.pp = (T::one() - kp) * pp;
        self.pv = (T::one() - kp) * pv;
        self.vv = vv - kv * pv;
        self.position
    }
}
