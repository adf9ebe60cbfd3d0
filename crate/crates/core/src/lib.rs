//! Point-to-select device selection from single-anchor UWB measurements.
//!
//! A user points a phone at an IoT device with a short sliding gesture. The
//! anchor's range/angle readings are smoothed into a trajectory, the principal
//! direction becomes a pointing ray, and devices in a catalog are ranked by how
//! well the ray's motion aligns with each device's bearing. Device positions are
//! registered up front by pointing at them from two places.
//!
//! The core is generic over the scalar (`f32` or `f64`); the `*f` aliases below
//! fix it to `f64`.

pub mod eigen;
pub mod error;
pub mod geom;
pub mod kalman;
pub mod pointing;
pub mod registry;
pub mod scalar;
pub mod selector;
pub mod simkit;

pub use error::{Error, Result};
pub use geom::{
    angle_between, cartesian_to_spherical, nearest_point_between_rays, spherical_to_cartesian,
    wrap_angle, NearestPoint, Ray, UwbReading, Vec3,
};
pub use kalman::{ConstantVelocityFilter, KalmanConfig};
pub use pointing::{
    estimate_direction, estimate_direction_with, estimate_from_readings, gesture_quality,
    gesture_quality_with, smooth_trajectory, GestureLimits, PointingRay, QualityReport, Sample,
    Trajectory,
};
pub use registry::{
    locate_device, perturbation_sensitivity, user_separation_check, Catalog, DeviceRecord,
    Guidance, GuidanceReason, Hint, RegistrationAttempt, RegistrationFix, RegistrationOutcome,
    RegistrationPolicy, SeparationCheck,
};
pub use scalar::Real;
pub use selector::{
    baseline_aoa, baseline_distance_change, score_device, score_position, select, select_with,
    BaselinePick, Choice, RankedDevice, SelectionResult, SelectorConfig,
};
pub use simkit::{
    generate_gesture, segment_by_speed, theoretical_resolution, AnchorModel, DeviceFeeds,
    GestureSpec, NoiseModel, SimulatedGesture, Simulator,
};

pub type Vec3f = Vec3<f64>;
pub type UwbReadingf = UwbReading<f64>;
pub type Rayf = Ray<f64>;
pub type Trajectoryf = Trajectory<f64>;
pub type PointingRayf = PointingRay<f64>;
pub type DeviceRecordf = DeviceRecord<f64>;
pub type Catalogf = Catalog<f64>;
pub type NoiseModelf = NoiseModel<f64>;
pub type GestureSpecf = GestureSpec<f64>;
pub type AnchorModelf = AnchorModel<f64>;
pub type Simulatorf = Simulator<f64>;
