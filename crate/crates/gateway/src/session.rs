use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use pointsel_core::{
    estimate_from_readings, select, user_separation_check, KalmanConfig, PointingRay,
    RegistrationAttempt, RegistrationOutcome, RegistrationPolicy, UwbReading, Vec3,
};
use pointsel_harness::sweep::run_sweep;
use pointsel_harness::{GestureRequest, Scenario, TraceRow};
use serde_json::{json, Value};

use crate::error::{GatewayError, Result};
use crate::protocol::{LogEntry, RaySummary, Request};

#[derive(Debug, Clone)]
struct OpenGesture {
    id: String,
    readings: Vec<UwbReading<f64>>,
}

/// Per-client state. Every request either fully applies or leaves the session
/// as it was, except `end_gesture`, which always clears the buffer.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub scenario: Scenario,
    open: Option<OpenGesture>,
    gestures: BTreeMap<String, PointingRay<f64>>,
    last_gesture: Option<String>,
    gesture_counter: u64,
    pending_first: Option<String>,
    simulations: u64,
    pub log: Vec<LogEntry>,
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reply types serialise")
}

/// Resolves a plain relative file name inside the scenario directory.
fn resolve(dir: Option<&Path>, name: &str) -> Result<PathBuf> {
    let dir =
        dir.ok_or_else(|| GatewayError::InvalidPath("no scenario directory configured".into()))?;
    let rel = Path::new(name);
    let plain = !name.is_empty() && rel.components().all(|c| matches!(c, Component::Normal(_)));
    if !plain {
        return Err(GatewayError::InvalidPath(format!(
            "{name:?} must be a relative path without '..'"
        )));
    }
    Ok(dir.join(rel))
}

impl Session {
    pub fn new(id: String, scenario: Scenario) -> Self {
        Session {
            id,
            scenario,
            open: None,
            gestures: BTreeMap::new(),
            last_gesture: None,
            gesture_counter: 0,
            pending_first: None,
            simulations: 0,
            log: Vec::new(),
        }
    }

    /// Completed gesture `name`, or the latest one.
    fn gesture(&self, name: Option<&str>) -> Result<(String, &PointingRay<f64>)> {
        let id = match name {
            Some(n) => n.to_string(),
            None => self
                .last_gesture
                .clone()
                .ok_or_else(|| GatewayError::NoGesture("no completed gesture".into()))?,
        };
        let ray = self
            .gestures
            .get(&id)
            .ok_or_else(|| GatewayError::NoGesture(format!("no completed gesture {id:?}")))?;
        Ok((id, ray))
    }

    fn next_gesture_id(&mut self) -> String {
        loop {
            self.gesture_counter += 1;
            let id = format!("g{}", self.gesture_counter);
            if !self.gestures.contains_key(&id) {
                return id;
            }
        }
    }

    pub fn apply(&mut self, req: Request, scenario_dir: Option<&Path>) -> Result<Value> {
        match req {
            Request::CreateSession { .. } | Request::CloseSession {} => {
                Err(GatewayError::Protocol(
                    "session lifecycle messages are handled by the gateway".into(),
                ))
            }
            Request::SessionInfo {} => Ok(json!({
                "session": self.id,
                "scenario_name": self.scenario.name,
                "devices": self.scenario.devices.len(),
                "gesture_open": self.open.as_ref().map(|g| &g.id),
                "buffered": self.open.as_ref().map_or(0, |g| g.readings.len()),
                "gestures": self.gestures.keys().collect::<Vec<_>>(),
                "last_gesture": self.last_gesture,
                "pending_first": self.pending_first,
                "events": self.log,
            })),
            Request::LoadScenario { scenario, path } => {
                let s = match (scenario, path) {
                    (Some(doc), None) => Scenario::parse(&doc.to_string())?,
                    (None, Some(p)) => Scenario::read(&resolve(scenario_dir, &p)?)?,
                    _ => {
                        return Err(GatewayError::Protocol(
                            "load_scenario needs exactly one of scenario and path".into(),
                        ))
                    }
                };
                self.scenario = s;
                self.pending_first = None;
                Ok(json!({ "scenario": to_json(&self.scenario) }))
            }
            Request::SaveScenario { path } => {
                self.scenario.validate()?;
                if let Some(p) = &path {
                    self.scenario.write(&resolve(scenario_dir, p)?)?;
                }
                Ok(json!({ "scenario": to_json(&self.scenario), "path": path }))
            }
            Request::BeginGesture { gesture_id } => {
                if let Some(g) = &self.open {
                    return Err(GatewayError::GestureState(format!(
                        "gesture {:?} is still open",
                        g.id
                    )));
                }
                let id = match gesture_id {
                    Some(id) if self.gestures.contains_key(&id) => {
                        return Err(GatewayError::GestureState(format!(
                            "gesture id {id:?} already used"
                        )))
                    }
                    Some(id) => id,
                    None => self.next_gesture_id(),
                };
                self.open = Some(OpenGesture {
                    id: id.clone(),
                    readings: Vec::new(),
                });
                Ok(json!({ "gesture_id": id }))
            }
            Request::AppendReadings { readings } => {
                let open = self.open.as_mut().ok_or_else(|| {
                    GatewayError::GestureState("append_readings outside begin/end".into())
                })?;
                let converted = readings
                    .iter()
                    .enumerate()
                    .map(|(index, row)| {
                        row.to_reading()
                            .map_err(|source| GatewayError::Reading { index, source })
                    })
                    .collect::<Result<Vec<_>>>()?;
                open.readings.extend(converted);
                Ok(json!({
                    "gesture_id": open.id,
                    "appended": readings.len(),
                    "buffered": open.readings.len(),
                }))
            }
            Request::EndGesture {} => {
                let open = self.open.take().ok_or_else(|| {
                    GatewayError::GestureState("end_gesture without begin_gesture".into())
                })?;
                let ray = estimate_from_readings(&open.readings, &KalmanConfig::default())?;
                let summary = RaySummary::new(&open.id, &ray);
                self.gestures.insert(open.id.clone(), ray);
                self.last_gesture = Some(open.id);
                Ok(to_json(&summary))
            }
            Request::SimulateGesture {
                user,
                toward,
                device,
                displacement_m,
                speed_mps,
                jitter_m,
                seed,
            } => {
                let target = match (toward, device) {
                    (Some(t), None) => Vec3::from(t),
                    (None, Some(id)) => self.scenario.catalog()?.get(&id)?.position,
                    _ => {
                        return Err(GatewayError::Protocol(
                            "simulate_gesture needs exactly one of toward and device".into(),
                        ))
                    }
                };
                let seed = seed.unwrap_or(self.scenario.noise.seed.wrapping_add(self.simulations));
                let req = GestureRequest {
                    displacement_m,
                    speed_mps,
                    jitter_m,
                    seed: Some(seed),
                    ..GestureRequest::new(Vec3::from(user), target)
                };
                let spec = req.spec(&self.scenario)?;
                let g = req.simulate(&self.scenario)?;
                self.simulations += 1;
                let rows: Vec<TraceRow> = g.readings.iter().map(TraceRow::from_reading).collect();
                Ok(json!({
                    "seed": seed,
                    "spec": to_json(&spec),
                    "readings": to_json(&rows),
                    "truth": to_json(&g.truth.samples()),
                }))
            }
            Request::RegisterFirst { gesture } => {
                let (id, ray) = self.gesture(gesture.as_deref())?;
                let reply = json!({
                    "gesture_id": id,
                    "origin": to_json(&ray.origin()),
                    "direction": to_json(&ray.direction),
                });
                self.pending_first = Some(id);
                Ok(reply)
            }
            Request::RegisterSecond {
                gesture,
                label,
                device_id,
            } => {
                let first_id = self.pending_first.clone().ok_or_else(|| {
                    GatewayError::NoGesture("register_first has not been called".into())
                })?;
                let (first_id, first) = self.gesture(Some(&first_id))?;
                let (second_id, second) = self.gesture(gesture.as_deref())?;
                let attempt = RegistrationAttempt::new(first.clone(), second.clone());
                let registered_at = second.samples.samples().last().map_or(0.0, |s| s.timestamp);
                let separation = user_separation_check(first.origin(), second.origin());
                let policy = RegistrationPolicy::default();
                let mut catalog = self.scenario.catalog()?;
                let outcome = match &device_id {
                    Some(id) => catalog.update(id, &attempt, &policy, registered_at)?,
                    None => catalog.register(
                        label.as_deref().unwrap_or("device"),
                        &attempt,
                        &policy,
                        registered_at,
                    )?,
                };
                if let RegistrationOutcome::Registered(_) = outcome {
                    let mut next = self.scenario.clone();
                    next.set_catalog(&catalog);
                    next.validate()?;
                    self.scenario = next;
                    self.pending_first = None;
                }
                Ok(json!({
                    "first": first_id,
                    "second": second_id,
                    "outcome": to_json(&outcome),
                    "separation": to_json(&separation),
                }))
            }
            Request::Select { gesture } => {
                let (id, ray) = self.gesture(gesture.as_deref())?;
                let catalog = self.scenario.catalog()?;
                let result = select(ray, catalog.list())?;
                Ok(json!({ "gesture_id": id, "selection": to_json(&result) }))
            }
            Request::RunSweep(req) => {
                let report = run_sweep(&req, &self.scenario)?;
                Ok(json!({ "report": to_json(&report), "csv": report.to_csv() }))
            }
        }
    }
}
