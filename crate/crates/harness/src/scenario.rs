//! Scenario documents: room, anchor, device catalog and noise model as JSON.
//!
//! Positions are meters and angles degrees. The structs mirror the file
//! one-to-one so that read/write is lossless; conversion into engine types
//! happens through the accessor methods.

use std::path::Path;

use pointsel_core::{AnchorModel, Catalog, DeviceRecord, NoiseModel, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSection {
    pub fov_half_angle_deg: f64,
    pub min_range_m: f64,
}

impl Default for AnchorSection {
    fn default() -> Self {
        AnchorSection {
            fov_half_angle_deg: 60.0,
            min_range_m: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomBounds {
    pub min_m: [f64; 3],
    pub max_m: [f64; 3],
}

impl Default for RoomBounds {
    fn default() -> Self {
        RoomBounds {
            min_m: [-6.0, -3.0, 0.0],
            max_m: [6.0, 3.0, 10.0],
        }
    }
}

impl RoomBounds {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min_m[k] && p[k] <= self.max_m[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub id: String,
    pub label: String,
    pub position_m: [f64; 3],
    #[serde(default)]
    pub registered_at_s: f64,
    #[serde(default)]
    pub registration_gap_m: f64,
    #[serde(default)]
    pub registration_angle_deg: f64,
}

impl DeviceEntry {
    pub fn from_record(r: &DeviceRecord<f64>) -> Self {
        DeviceEntry {
            id: r.id.clone(),
            label: r.label.clone(),
            position_m: r.position.into(),
            registered_at_s: r.registered_at,
            registration_gap_m: r.registration_gap,
            registration_angle_deg: r.registration_angle.to_degrees(),
        }
    }

    pub fn to_record(&self) -> DeviceRecord<f64> {
        DeviceRecord {
            id: self.id.clone(),
            label: self.label.clone(),
            position: Vec3::from(self.position_m),
            registered_at: self.registered_at_s,
            registration_gap: self.registration_gap_m,
            registration_angle: self.registration_angle_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub range_sigma_m: f64,
    pub azimuth_sigma_deg: f64,
    pub elevation_sigma_deg: f64,
    /// Std of each entry of the per-gesture AoA distortion matrix
    /// (dimensionless, degrees of error per degree of offset).
    pub aoa_distortion_sigma: f64,
    /// Constant angle-of-arrival offset drawn once per gesture.
    #[serde(default)]
    pub aoa_bias_sigma_deg: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            range_sigma_m: 0.008,
            azimuth_sigma_deg: 0.03,
            elevation_sigma_deg: 0.03,
            aoa_distortion_sigma: 0.06,
            aoa_bias_sigma_deg: 0.0,
            seed: 0,
        }
    }
}

impl NoiseSection {
    pub fn to_model(&self) -> NoiseModel<f64> {
        NoiseModel {
            range_sigma: self.range_sigma_m,
            azimuth_sigma: self.azimuth_sigma_deg.to_radians(),
            elevation_sigma: self.elevation_sigma_deg.to_radians(),
            aoa_distortion_sigma: self.aoa_distortion_sigma,
            aoa_bias_sigma: self.aoa_bias_sigma_deg.to_radians(),
            seed: self.seed,
        }
    }

    /// Every sigma multiplied by `k`, seed kept.
    pub fn scaled(&self, k: f64) -> Self {
        NoiseSection {
            range_sigma_m: self.range_sigma_m * k,
            azimuth_sigma_deg: self.azimuth_sigma_deg * k,
            elevation_sigma_deg: self.elevation_sigma_deg * k,
            aoa_distortion_sigma: self.aoa_distortion_sigma * k,
            aoa_bias_sigma_deg: self.aoa_bias_sigma_deg * k,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureSection {
    pub sample_rate_hz: f64,
    /// Hand tremor for free-hand simulation; benchmark sweeps model a sliding
    /// track and ignore it.
    pub jitter_amplitude_m: f64,
}

impl Default for GestureSection {
    fn default() -> Self {
        GestureSection {
            sample_rate_hz: 55.0,
            jitter_amplitude_m: 0.003,
        }
    }
}

/// Record of the last `calibrate` run. `noise` holds the scaled result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInfo {
    pub target_median_deg: f64,
    pub achieved_median_deg: f64,
    /// Factor applied to the pre-calibration sigmas.
    pub scale: f64,
    pub base_noise: NoiseSection,
    pub trials_per_direction: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    #[serde(default)]
    pub anchor: AnchorSection,
    #[serde(default)]
    pub room: RoomBounds,
    #[serde(default)]
    pub devices: Vec<DeviceEntry>,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub gesture: GestureSection,
    #[serde(default)]
    pub calibration: Option<CalibrationInfo>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::new("default")
    }
}

impl Scenario {
    pub fn new(name: &str) -> Self {
        Scenario {
            format_version: FORMAT_VERSION,
            name: name.to_string(),
            anchor: AnchorSection::default(),
            room: RoomBounds::default(),
            devices: Vec::new(),
            noise: NoiseSection::default(),
            gesture: GestureSection::default(),
            calibration: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(HarnessError::UnsupportedVersion {
                found: self.format_version,
                supported: FORMAT_VERSION,
            });
        }
        for k in 0..3 {
            if !(self.room.min_m[k] < self.room.max_m[k]) {
                return Err(HarnessError::Scenario(format!(
                    "room bound {k}: min must be below max"
                )));
            }
        }
        for (i, d) in self.devices.iter().enumerate() {
            if self.devices[..i].iter().any(|o| o.id == d.id) {
                return Err(HarnessError::Scenario(format!(
                    "duplicate device id {:?}",
                    d.id
                )));
            }
            if !d.position_m.iter().all(|v| v.is_finite()) || !self.room.contains(d.position_m) {
                return Err(HarnessError::Scenario(format!(
                    "device {:?} lies outside the room",
                    d.id
                )));
            }
        }
        self.anchor_model().validate()?;
        self.noise_model().validate()?;
        let g = &self.gesture;
        if !(g.sample_rate_hz > 0.0) || !(g.jitter_amplitude_m >= 0.0) {
            return Err(HarnessError::Scenario(
                "gesture sample_rate_hz must be > 0 and jitter >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(json_parse_error)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(HarnessError::UnsupportedVersion {
                    found: u32::try_from(v).unwrap_or(u32::MAX),
                    supported: FORMAT_VERSION,
                })
            }
            None => {
                return Err(HarnessError::parse(
                    1,
                    "format_version",
                    "missing or not an integer",
                ))
            }
        }
        let s: Scenario = serde_json::from_str(text).map_err(json_parse_error)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serialises");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        Scenario::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.validate()?;
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn anchor_model(&self) -> AnchorModel<f64> {
        AnchorModel {
            fov_half_angle: self.anchor.fov_half_angle_deg.to_radians(),
            min_range: self.anchor.min_range_m,
        }
    }

    pub fn noise_model(&self) -> NoiseModel<f64> {
        self.noise.to_model()
    }

    pub fn catalog(&self) -> Result<Catalog<f64>> {
        Ok(Catalog::from_records(
            self.devices.iter().map(DeviceEntry::to_record).collect(),
        )?)
    }

    pub fn set_catalog(&mut self, catalog: &Catalog<f64>) {
        self.devices = catalog
            .list()
            .iter()
            .map(DeviceEntry::from_record)
            .collect();
    }
}

fn json_parse_error(e: serde_json::Error) -> HarnessError {
    HarnessError::Parse {
        line: e.line(),
        field: format!("column {}", e.column()),
        message: e.to_string(),
    }
}
