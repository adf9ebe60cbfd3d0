//! Monte-Carlo benchmark sweeps.
//!
//! Every cell owns a generator on stream `cell index` of the master seed, so
//! cells run in parallel without changing results.
//!
//! Benchmark geometry: the user device sits at `range` meters from the anchor
//! and the gesture lies in the plane facing the anchor (perpendicular to the
//! line of sight), moved as if on a sliding track (no hand tremor unless
//! requested).

use std::str::FromStr;

use pointsel_core::{
    angle_between, estimate_from_readings, select, theoretical_resolution, AnchorModel,
    DeviceRecord, Error, GestureSpec, KalmanConfig, NoiseModel, Ray, Simulator, Vec3,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{CellStatus, ExperimentReport, ReportCell};
use crate::scenario::Scenario;
use crate::stats::{mean, median, percentile};

pub const BENCH_RANGE_M: f64 = 5.0;
pub const BENCH_DISPLACEMENT_M: f64 = 0.2;
pub const BENCH_SPEED_MPS: f64 = 0.1;
/// Direction accuracy used for the theoretical resolution curve, degrees.
pub const REFERENCE_ACCURACY_DEG: f64 = 2.36;
/// Number of in-plane directions cycled through by non-direction sweeps.
const DIRECTION_STEPS: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionAxis {
    /// In-plane gesture direction, degrees.
    Direction,
    /// Anchor-to-user range, meters.
    Distance,
    /// Off-boresight bearing of the user, degrees.
    Angle,
    /// Gesture length, meters.
    Displacement,
    /// Gesture speed, m/s.
    Velocity,
}

impl DirectionAxis {
    pub const ALL: [DirectionAxis; 5] = [
        DirectionAxis::Direction,
        DirectionAxis::Distance,
        DirectionAxis::Angle,
        DirectionAxis::Displacement,
        DirectionAxis::Velocity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DirectionAxis::Direction => "direction",
            DirectionAxis::Distance => "distance",
            DirectionAxis::Angle => "angle",
            DirectionAxis::Displacement => "displacement",
            DirectionAxis::Velocity => "velocity",
        }
    }

    pub fn parameter(self) -> &'static str {
        match self {
            DirectionAxis::Direction => "direction_deg",
            DirectionAxis::Distance => "distance_m",
            DirectionAxis::Angle => "angle_deg",
            DirectionAxis::Displacement => "displacement_m",
            DirectionAxis::Velocity => "speed_mps",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            DirectionAxis::Direction => (0..36).map(|k| 10.0 * k as f64).collect(),
            DirectionAxis::Distance => vec![1.0, 2.0, 3.0, 4.0, 5.0],
            DirectionAxis::Angle => (-5..=5).map(|k| 10.0 * k as f64).collect(),
            DirectionAxis::Displacement => vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
            DirectionAxis::Velocity => vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl FromStr for DirectionAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DirectionAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown axis {s:?} (expected direction|distance|angle|displacement|velocity)"
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub trials: usize,
    pub seed: u64,
    /// Hand tremor, m. Zero reproduces the sliding-track benchmark.
    pub jitter_amplitude: f64,
    pub kalman: KalmanConfig<f64>,
}

impl SweepOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        SweepOptions {
            trials,
            seed,
            jitter_amplitude: 0.0,
            kalman: KalmanConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Experiment("trials must be >= 1".into()));
        }
        if !(self.jitter_amplitude >= 0.0) {
            return Err(HarnessError::Experiment("jitter must be >= 0".into()));
        }
        self.kalman.validate()?;
        Ok(())
    }
}

/// Orthonormal pair spanning the plane perpendicular to `bearing`.
pub fn facing_plane(bearing: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let b = bearing.normalized().unwrap_or(Vec3::unit_z());
    let e1 = Vec3::unit_y()
        .cross(b)
        .normalized()
        .unwrap_or(Vec3::unit_x());
    (e1, b.cross(e1))
}

/// Direction at `psi` radians within the plane facing the anchor.
pub fn in_plane_direction(bearing: Vec3<f64>, psi: f64) -> Vec3<f64> {
    let (e1, e2) = facing_plane(bearing);
    e1 * psi.cos() + e2 * psi.sin()
}

/// Geometry of one direction-sweep trial.
fn trial_gesture(
    axis: DirectionAxis,
    value: f64,
    trial: usize,
    sample_rate: f64,
    jitter: f64,
) -> GestureSpec<f64> {
    let step = std::f64::consts::TAU / DIRECTION_STEPS as f64;
    let mut psi = step * (trial % DIRECTION_STEPS) as f64;
    let mut range = BENCH_RANGE_M;
    let mut bearing_deg = 0.0f64;
    let mut displacement = BENCH_DISPLACEMENT_M;
    let mut speed = BENCH_SPEED_MPS;
    match axis {
        DirectionAxis::Direction => psi = value.to_radians(),
        DirectionAxis::Distance => range = value,
        DirectionAxis::Angle => bearing_deg = value,
        DirectionAxis::Displacement => displacement = value,
        DirectionAxis::Velocity => speed = value,
    }
    let b = bearing_deg.to_radians();
    let bearing = Vec3::new(b.sin(), 0.0, b.cos());
    let center = bearing * range;
    let direction = in_plane_direction(bearing, psi);
    GestureSpec {
        start: center - direction * (0.5 * displacement),
        direction,
        displacement,
        speed,
        jitter_amplitude: jitter,
        sample_rate,
        start_time: 0.0,
    }
}

fn check_axis_value(axis: DirectionAxis, v: f64) -> Result<()> {
    let ok = match axis {
        DirectionAxis::Direction | DirectionAxis::Angle => v.is_finite(),
        _ => v.is_finite() && v > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Experiment(format!(
            "invalid {} grid value {v}",
            axis.name()
        )))
    }
}

/// Angular errors (degrees) of one direction-sweep cell, or the reason the
/// cell geometry is invalid.
pub fn direction_cell_errors(
    axis: DirectionAxis,
    value: f64,
    noise: &NoiseModel<f64>,
    anchor: &AnchorModel<f64>,
    sample_rate: f64,
    opts: &SweepOptions,
    stream: u64,
) -> std::result::Result<(Vec<f64>, usize), String> {
    let mut sim = Simulator::with_stream(
        NoiseModel {
            seed: opts.seed,
            ..*noise
        },
        *anchor,
        stream,
    );
    let mut errors = Vec::with_capacity(opts.trials);
    let mut failed = 0;
    for trial in 0..opts.trials {
        let spec = trial_gesture(axis, value, trial, sample_rate, opts.jitter_amplitude);
        let g = match sim.generate_gesture(&spec) {
            Ok(g) => g,
            Err(Error::OutOfFov { index }) => {
                return Err(format!(
                    "trial {trial} leaves the field of view at sample {index}"
                ));
            }
            Err(e) => return Err(e.to_string()),
        };
        match estimate_from_readings(&g.readings, &opts.kalman) {
            Ok(ray) => errors.push(angle_between(ray.direction, spec.direction).to_degrees()),
            Err(_) => failed += 1,
        }
    }
    Ok((errors, failed))
}

pub fn run_direction_sweep(
    axis: DirectionAxis,
    grid: &[f64],
    scenario: &Scenario,
    opts: &SweepOptions,
) -> Result<ExperimentReport> {
    if grid.is_empty() {
        return Err(HarnessError::Experiment("grid must not be empty".into()));
    }
    opts.validate()?;
    scenario.validate()?;
    for &v in grid {
        check_axis_value(axis, v)?;
    }
    let noise = scenario.noise_model();
    let anchor = scenario.anchor_model();
    let rate = scenario.gesture.sample_rate_hz;
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let mut cell = ReportCell::empty(value, opts.trials);
            match direction_cell_errors(axis, value, &noise, &anchor, rate, opts, idx as u64) {
                Ok((errs, _)) => {
                    cell.completed = errs.len();
                    cell.median_deg = median(&errs);
                    cell.p90_deg = percentile(&errs, 90.0);
                }
                Err(reason) => cell.status = CellStatus::Skipped(reason),
            }
            cell
        })
        .collect();
    Ok(ExperimentReport {
        experiment: format!("direction_{}", axis.name()),
        parameter: axis.parameter().into(),
        seed: opts.seed,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionOptions {
    pub trials: usize,
    pub seed: u64,
    /// Required fraction of correct selections.
    pub accuracy_target: f64,
    pub bisection_steps: usize,
    /// Upper bisection bracket as an angle subtended at the user, degrees.
    pub max_angle_deg: f64,
    pub jitter_amplitude: f64,
    pub kalman: KalmanConfig<f64>,
}

impl ResolutionOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        ResolutionOptions {
            trials,
            seed,
            accuracy_target: 0.9,
            bisection_steps: 20,
            max_angle_deg: 30.0,
            jitter_amplitude: 0.0,
            kalman: KalmanConfig::default(),
        }
    }
}

/// Two devices `range` meters ahead of the user at (0, 0, 5), split by
/// `separation` along the anchor's line of sight (side by side as seen by the
/// user). The gesture runs across the line of sight toward one of them; trials
/// alternate targets. Returns the fraction of trials whose top-ranked device is the
/// target.
pub fn selection_accuracy(
    range: f64,
    separation: f64,
    noise: &NoiseModel<f64>,
    anchor: &AnchorModel<f64>,
    sample_rate: f64,
    opts: &ResolutionOptions,
    stream: u64,
) -> Result<f64> {
    let user = Vec3::new(0.0, 0.0, BENCH_RANGE_M);
    let half = Vec3::unit_z() * (0.5 * separation);
    let ahead = user + Vec3::unit_x() * range;
    let devices = [device("far", ahead + half), device("near", ahead - half)];
    let mut sim = Simulator::with_stream(
        NoiseModel {
            seed: opts.seed,
            ..*noise
        },
        *anchor,
        stream,
    );
    let mut hits = 0usize;
    for trial in 0..opts.trials {
        let target = &devices[trial % 2];
        let spec = GestureSpec {
            jitter_amplitude: opts.jitter_amplitude,
            sample_rate,
            ..GestureSpec::toward(user, target.position)?
        };
        let g = sim.generate_gesture(&spec)?;
        let Ok(ray) = estimate_from_readings(&g.readings, &opts.kalman) else {
            continue;
        };
        let result = select(&ray, &devices)?;
        if result.best().id == target.id {
            hits += 1;
        }
    }
    Ok(hits as f64 / opts.trials as f64)
}

fn device(id: &str, position: Vec3<f64>) -> DeviceRecord<f64> {
    DeviceRecord {
        id: id.into(),
        label: id.into(),
        position,
        registered_at: 0.0,
        registration_gap: 0.0,
        registration_angle: 0.0,
    }
}

pub fn run_resolution_sweep(
    ranges: &[f64],
    scenario: &Scenario,
    opts: &ResolutionOptions,
) -> Result<ExperimentReport> {
    if ranges.is_empty() || ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(HarnessError::Experiment(
            "ranges must be non-empty and positive".into(),
        ));
    }
    if opts.trials == 0 || !(opts.accuracy_target > 0.0 && opts.accuracy_target <= 1.0) {
        return Err(HarnessError::Experiment(
            "trials >= 1 and accuracy_target in (0, 1] required".into(),
        ));
    }
    if !(opts.max_angle_deg > 0.0 && opts.max_angle_deg < 90.0) {
        return Err(HarnessError::Experiment(
            "max_angle_deg must lie in (0, 90)".into(),
        ));
    }
    scenario.validate()?;
    let noise = scenario.noise_model();
    let anchor = scenario.anchor_model();
    let rate = scenario.gesture.sample_rate_hz;
    let eps = REFERENCE_ACCURACY_DEG.to_radians();

    let cells = ranges
        .par_iter()
        .enumerate()
        .map(|(idx, &d)| -> Result<ReportCell> {
            let mut cell = ReportCell::empty(d, opts.trials);
            cell.theoretical_m = Some(theoretical_resolution(d, eps));
            // The same stream for every probe keeps accuracy a smooth function
            // of separation.
            let acc = |s: f64| selection_accuracy(d, s, &noise, &anchor, rate, opts, idx as u64);
            let mut hi = 2.0 * d * (0.5 * opts.max_angle_deg.to_radians()).tan();
            let hi_acc = acc(hi)?;
            if hi_acc < opts.accuracy_target {
                cell.accuracy_pct = Some(100.0 * hi_acc);
                cell.status =
                    CellStatus::Unconverged(format!("accuracy below target at separation {hi} m"));
                return Ok(cell);
            }
            let mut lo = 0.0;
            let mut best_acc = hi_acc;
            for _ in 0..opts.bisection_steps {
                let mid = 0.5 * (lo + hi);
                let a = acc(mid)?;
                if a >= opts.accuracy_target {
                    hi = mid;
                    best_acc = a;
                } else {
                    lo = mid;
                }
            }
            cell.completed = opts.trials;
            cell.resolution_m = Some(hi);
            cell.accuracy_pct = Some(100.0 * best_acc);
            Ok(cell)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        experiment: "resolution".into(),
        parameter: "distance_m".into(),
        seed: opts.seed,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationSweepOptions {
    pub trials: usize,
    pub seed: u64,
    /// True device position in the anchor frame.
    pub device: Vec3<f64>,
    /// Distance from each user position to the device, m.
    pub user_distance: f64,
    pub jitter_amplitude: f64,
    pub kalman: KalmanConfig<f64>,
}

impl RegistrationSweepOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        RegistrationSweepOptions {
            trials,
            seed,
            device: Vec3::new(1.5, 0.0, 5.0),
            user_distance: 3.0,
            jitter_amplitude: 0.0,
            kalman: KalmanConfig::default(),
        }
    }
}

/// Two user positions `user_distance` from the device, placed symmetrically
/// so the pointing directions differ by `angle` radians.
pub fn registration_positions(
    device: Vec3<f64>,
    user_distance: f64,
    angle: f64,
) -> (Vec3<f64>, Vec3<f64>) {
    let back = Vec3::new(-user_distance, 0.0, 0.0);
    let half = 0.5 * angle;
    (
        device + back.rotated_about(Vec3::unit_y(), half),
        device + back.rotated_about(Vec3::unit_y(), -half),
    )
}

/// Position errors (m) of one registration cell.
pub fn registration_cell_errors(
    angle_deg: f64,
    noise: &NoiseModel<f64>,
    anchor: &AnchorModel<f64>,
    sample_rate: f64,
    opts: &RegistrationSweepOptions,
    stream: u64,
) -> std::result::Result<Vec<f64>, String> {
    let (u1, u2) = registration_positions(opts.device, opts.user_distance, angle_deg.to_radians());
    let mut sim = Simulator::with_stream(
        NoiseModel {
            seed: opts.seed,
            ..*noise
        },
        *anchor,
        stream,
    );
    let mut errors = Vec::with_capacity(opts.trials);
    for _ in 0..opts.trials {
        let mut rays: Vec<Ray<f64>> = Vec::with_capacity(2);
        for user in [u1, u2] {
            let spec = GestureSpec {
                jitter_amplitude: opts.jitter_amplitude,
                sample_rate,
                ..GestureSpec::toward(user, opts.device).map_err(|e| e.to_string())?
            };
            let g = match sim.generate_gesture(&spec) {
                Ok(g) => g,
                Err(Error::OutOfFov { index }) => {
                    return Err(format!(
                        "user position leaves the field of view at sample {index}"
                    ))
                }
                Err(e) => return Err(e.to_string()),
            };
            if let Ok(ray) = estimate_from_readings(&g.readings, &opts.kalman) {
                rays.push(ray.as_ray());
            }
        }
        if let [a, b] = rays.as_slice() {
            if let Ok(sol) = pointsel_core::nearest_point_between_rays(a, b) {
                errors.push(sol.point.distance(opts.device));
            }
        }
    }
    Ok(errors)
}

pub fn run_registration_sweep(
    angles_deg: &[f64],
    scenario: &Scenario,
    opts: &RegistrationSweepOptions,
) -> Result<ExperimentReport> {
    if angles_deg.is_empty() || angles_deg.iter().any(|a| !(*a > 0.0 && *a < 180.0)) {
        return Err(HarnessError::Experiment(
            "angle differences must be non-empty and in (0, 180)".into(),
        ));
    }
    if opts.trials == 0 || !(opts.user_distance > 0.0) {
        return Err(HarnessError::Experiment(
            "trials >= 1 and user_distance > 0 required".into(),
        ));
    }
    scenario.validate()?;
    let noise = scenario.noise_model();
    let anchor = scenario.anchor_model();
    let rate = scenario.gesture.sample_rate_hz;
    let cells = angles_deg
        .par_iter()
        .enumerate()
        .map(|(idx, &a)| {
            let mut cell = ReportCell::empty(a, opts.trials);
            match registration_cell_errors(a, &noise, &anchor, rate, opts, idx as u64) {
                Ok(errs) => {
                    cell.completed = errs.len();
                    cell.mean_error_m = mean(&errs);
                    cell.p90_error_m = percentile(&errs, 90.0);
                }
                Err(reason) => cell.status = CellStatus::Skipped(reason),
            }
            cell
        })
        .collect();
    Ok(ExperimentReport {
        experiment: "registration".into(),
        parameter: "angle_difference_deg".into(),
        seed: opts.seed,
        cells,
    })
}


fn default_trials() -> usize {
    100
}

fn default_user_distance() -> f64 {
    3.0
}

/// Any sweep by axis name, as accepted by the CLI and the gateway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    /// `direction | distance | angle | displacement | velocity | resolution |
    /// registration`.
    pub axis: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Swept values; each axis has a default grid.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// Registration only: user-to-device distance, m.
    #[serde(default = "default_user_distance")]
    pub user_distance: f64,
}

impl SweepRequest {
    pub fn new(axis: &str, trials: usize, seed: u64) -> Self {
        SweepRequest {
            axis: axis.to_string(),
            trials,
            seed,
            grid: None,
            user_distance: default_user_distance(),
        }
    }
}

pub fn run_sweep(req: &SweepRequest, scenario: &Scenario) -> Result<ExperimentReport> {
    match req.axis.as_str() {
        "resolution" => {
            let grid = req
                .grid
                .clone()
                .unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0]);
            run_resolution_sweep(
                &grid,
                scenario,
                &ResolutionOptions::new(req.trials, req.seed),
            )
        }
        "registration" => {
            let grid = req
                .grid
                .clone()
                .unwrap_or_else(|| (1..=12).map(|k| 5.0 * k as f64).collect());
            let opts = RegistrationSweepOptions {
                user_distance: req.user_distance,
                ..RegistrationSweepOptions::new(req.trials, req.seed)
            };
            run_registration_sweep(&grid, scenario, &opts)
        }
        other => {
            let axis: DirectionAxis = other.parse().map_err(HarnessError::Experiment)?;
            let grid = req.grid.clone().unwrap_or_else(|| axis.default_grid());
            run_direction_sweep(
                axis,
                &grid,
                scenario,
                &SweepOptions::new(req.trials, req.seed),
            )
        }
    }
}
