//! Message schema. Every request is a JSON object with `type`, `session`
//! (omitted or null only for `create_session`) and `request_id` (any JSON
//! value, echoed back). The remaining fields depend on `type`.

use pointsel_core::{PointingRay, QualityReport};
use pointsel_harness::sweep::SweepRequest;
use pointsel_harness::TraceRow;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ErrorBody;

pub const PROTOCOL_VERSION: u64 = 1;

fn default_displacement() -> f64 {
    0.2
}

fn default_speed() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    /// Starts a session, optionally with a scenario document.
    CreateSession {
        #[serde(default)]
        scenario: Option<Value>,
    },
    CloseSession {},
    SessionInfo {},
    /// Replaces the active scenario from an inline document or a file in the
    /// scenario directory. Exactly one of the two.
    LoadScenario {
        #[serde(default)]
        scenario: Option<Value>,
        #[serde(default)]
        path: Option<String>,
    },
    /// Returns the active scenario; also writes it when `path` is given.
    SaveScenario {
        #[serde(default)]
        path: Option<String>,
    },
    BeginGesture {
        #[serde(default)]
        gesture_id: Option<String>,
    },
    AppendReadings {
        readings: Vec<TraceRow>,
    },
    EndGesture {},
    /// Exactly one of `toward` and `device`.
    SimulateGesture {
        user: [f64; 3],
        #[serde(default)]
        toward: Option<[f64; 3]>,
        #[serde(default)]
        device: Option<String>,
        #[serde(default = "default_displacement")]
        displacement_m: f64,
        #[serde(default = "default_speed")]
        speed_mps: f64,
        #[serde(default)]
        jitter_m: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `gesture` names a completed gesture; defaults to the latest.
    RegisterFirst {
        #[serde(default)]
        gesture: Option<String>,
    },
    /// Adds a device, or re-registers `device_id` when given.
    RegisterSecond {
        #[serde(default)]
        gesture: Option<String>,
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        device_id: Option<String>,
    },
    Select {
        #[serde(default)]
        gesture: Option<String>,
    },
    RunSweep(SweepRequest),
}

impl Request {
    pub fn kind(&self) -> &'static str {
        match self {
            Request::CreateSession { .. } => "create_session",
            Request::CloseSession {} => "close_session",
            Request::SessionInfo {} => "session_info",
            Request::LoadScenario { .. } => "load_scenario",
            Request::SaveScenario { .. } => "save_scenario",
            Request::BeginGesture { .. } => "begin_gesture",
            Request::AppendReadings { .. } => "append_readings",
            Request::EndGesture {} => "end_gesture",
            Request::SimulateGesture { .. } => "simulate_gesture",
            Request::RegisterFirst { .. } => "register_first",
            Request::RegisterSecond { .. } => "register_second",
            Request::Select { .. } => "select",
            Request::RunSweep(_) => "run_sweep",
        }
    }
}

/// Reply envelope. Exactly one of `result` and `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub protocol_version: u64,
    pub request_id: Value,
    pub session: Option<String>,
    #[serde(rename = "type")]
    pub kind: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

/// Reply to `end_gesture`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySummary {
    pub gesture_id: String,
    pub origin: [f64; 3],
    /// Unit pointing direction.
    pub direction: [f64; 3],
    pub samples: usize,
    pub net_displacement_m: f64,
    pub mean_speed_mps: f64,
    pub explained_variance_ratio: f64,
    pub quality: QualityReport,
    pub flags: Vec<String>,
    /// Smoothed positions, one per reading.
    pub path: Vec<[f64; 3]>,
}

impl RaySummary {
    pub fn new(gesture_id: &str, ray: &PointingRay<f64>) -> Self {
        let quality = pointsel_core::gesture_quality(ray);
        RaySummary {
            gesture_id: gesture_id.to_string(),
            origin: ray.origin().into(),
            direction: ray.direction.into(),
            samples: ray.samples.len(),
            net_displacement_m: ray.net_displacement,
            mean_speed_mps: ray.mean_speed,
            explained_variance_ratio: ray.explained_variance_ratio,
            quality,
            flags: quality.flag_names().into_iter().map(String::from).collect(),
            path: ray.samples.positions().map(Into::into).collect(),
        }
    }
}

/// One entry of a session's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub request_id: Value,
    #[serde(rename = "type")]
    pub kind: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}
