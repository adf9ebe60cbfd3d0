//! Shared test support: a small room, gesture generation and a reference
//! interpreter that answers protocol messages with direct library calls.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pointsel_core::{
    estimate_from_readings, gesture_quality, select, user_separation_check, Error, KalmanConfig,
    PointingRay, RegistrationAttempt, RegistrationOutcome, RegistrationPolicy, UwbReading, Vec3,
};
use pointsel_harness::scenario::DeviceEntry;
use pointsel_harness::sweep::{run_sweep, SweepRequest};
use pointsel_harness::{GestureRequest, HarnessError, Scenario, TraceRow};
use serde_json::{json, Value};

pub fn room() -> Scenario {
    let mut s = Scenario::new("room");
    for (id, p) in [
        ("lamp", [3.0, 0.0, 5.0]),
        ("tv", [3.0, 1.5, 5.0]),
        ("fan", [0.0, 0.0, 8.0]),
    ] {
        s.devices.push(DeviceEntry {
            id: id.into(),
            label: id.into(),
            position_m: p,
            registered_at_s: 0.0,
            registration_gap_m: 0.0,
            registration_angle_deg: 0.0,
        });
    }
    s
}

pub fn room_json() -> Value {
    serde_json::to_value(room()).unwrap()
}

/// Simulated readings of a gesture at `user` toward `target`, in wire units.
pub fn gesture_rows(user: Vec3<f64>, target: Vec3<f64>, seed: u64) -> Vec<TraceRow> {
    let req = GestureRequest {
        seed: Some(seed),
        ..GestureRequest::new(user, target)
    };
    req.simulate(&Scenario::new("gen"))
        .unwrap()
        .readings
        .iter()
        .map(TraceRow::from_reading)
        .collect()
}

pub fn rows_json(rows: &[TraceRow]) -> Value {
    serde_json::to_value(rows).unwrap()
}

/// Field-exact expectation for one message: `Ok(result)` or `Err(code)`.
pub type Expected = Result<Value, String>;

#[derive(Debug, Clone)]
struct RefSession {
    scenario: Scenario,
    open: Option<(String, Vec<UwbReading<f64>>)>,
    rays: BTreeMap<String, PointingRay<f64>>,
    last: Option<String>,
    counter: u64,
    first: Option<String>,
    sims: u64,
    log: Vec<Value>,
}

impl RefSession {
    fn new(scenario: Scenario) -> Self {
        RefSession {
            scenario,
            open: None,
            rays: BTreeMap::new(),
            last: None,
            counter: 0,
            first: None,
            sims: 0,
            log: Vec::new(),
        }
    }

    fn ray(&self, name: Option<String>) -> Result<(String, PointingRay<f64>), String> {
        let id = name.or_else(|| self.last.clone()).ok_or("NO_GESTURE")?;
        let ray = self.rays.get(&id).cloned().ok_or("NO_GESTURE")?;
        Ok((id, ray))
    }
}

fn engine_code(e: &Error) -> String {
    match e {
        Error::InvalidReading(_) => "INVALID_READING",
        Error::DegeneratePosition => "DEGENERATE_POSITION",
        Error::ParallelRays { .. } => "PARALLEL_RAYS",
        Error::Ordering { .. } => "ORDERING",
        Error::InsufficientData { .. } => "INSUFFICIENT_DATA",
        Error::GestureTooShort { .. } => "GESTURE_TOO_SHORT",
        Error::DegenerateGeometry { .. } => "DEGENERATE_GEOMETRY",
        Error::EmptyCatalog => "EMPTY_CATALOG",
        Error::NotFound(_) => "NOT_FOUND",
        Error::DuplicateId(_) => "DUPLICATE_ID",
        Error::OutOfFov { .. } => "OUT_OF_FOV",
        Error::InvalidParameter(_) => "INVALID_PARAMETER",
    }
    .into()
}

fn harness_code(e: &HarnessError) -> String {
    match e {
        HarnessError::Engine(e) => engine_code(e),
        HarnessError::Parse { .. } | HarnessError::Json(_) => "PARSE_ERROR".into(),
        HarnessError::UnsupportedVersion { .. } => "UNSUPPORTED_VERSION".into(),
        HarnessError::Scenario(_) => "INVALID_SCENARIO".into(),
        HarnessError::Experiment(_) => "INVALID_EXPERIMENT".into(),
        HarnessError::Io(_) => "IO_ERROR".into(),
    }
}

fn protocol() -> String {
    "PROTOCOL_ERROR".into()
}

fn opt_str(msg: &Value, key: &str) -> Result<Option<String>, String> {
    match msg.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(protocol()),
    }
}

fn v<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap()
}

/// Answers messages the way the gateway should, by calling the libraries
/// directly. Covers the message shapes used in the tests.
#[derive(Debug, Default)]
pub struct Reference {
    sessions: BTreeMap<String, RefSession>,
    created: u64,
}

impl Reference {
    pub fn expect(&mut self, msg: &Value) -> Expected {
        if msg.get("request_id").is_none() {
            return Err(protocol());
        }
        let kind = msg
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(protocol)?
            .to_string();
        let session = opt_str(msg, "session")?;
        if kind == "create_session" {
            let scenario = match msg.get("scenario") {
                Some(doc) if !doc.is_null() => {
                    Scenario::parse(&doc.to_string()).map_err(|e| harness_code(&e))?
                }
                _ => Scenario::default(),
            };
            self.created += 1;
            let id = format!("s-{}", self.created);
            let mut s = RefSession::new(scenario);
            s.log
                .push(json!({ "request_id": msg["request_id"], "type": kind, "ok": true }));
            let out = json!({ "session": id, "scenario": v(&s.scenario) });
            self.sessions.insert(id, s);
            return Ok(out);
        }
        const KNOWN: [&str; 12] = [
            "close_session",
            "session_info",
            "load_scenario",
            "save_scenario",
            "begin_gesture",
            "append_readings",
            "end_gesture",
            "simulate_gesture",
            "register_first",
            "register_second",
            "select",
            "run_sweep",
        ];
        if !KNOWN.contains(&kind.as_str()) {
            return Err(protocol());
        }
        let id = session.ok_or_else(protocol)?;
        // Field-shape checks that the gateway performs while decoding.
        for key in [
            "gesture",
            "gesture_id",
            "label",
            "device_id",
            "path",
            "device",
        ] {
            opt_str(msg, key)?;
        }
        if kind == "close_session" {
            return match self.sessions.remove(&id) {
                Some(_) => Ok(json!({ "closed": true })),
                None => Err("UNKNOWN_SESSION".into()),
            };
        }
        let s = self.sessions.get_mut(&id).ok_or("UNKNOWN_SESSION")?;
        let snapshot = s.clone();
        let out = apply(s, &id, &kind, msg);
        if out.is_err() && kind != "end_gesture" {
            // Failed requests leave the session untouched.
            let log = std::mem::take(&mut s.log);
            *s = snapshot;
            s.log = log;
        }
        let mut entry = json!({ "request_id": msg["request_id"], "type": kind, "ok": out.is_ok() });
        if let Err(code) = &out {
            entry["code"] = json!(code);
        }
        s.log.push(entry);
        out
    }
}

fn apply(s: &mut RefSession, id: &str, kind: &str, msg: &Value) -> Expected {
    let hc = |e: HarnessError| harness_code(&e);
    let ec = |e: Error| engine_code(&e);
    match kind {
        "session_info" => Ok(json!({
            "session": id,
            "scenario_name": s.scenario.name,
            "devices": s.scenario.devices.len(),
            "gesture_open": s.open.as_ref().map(|g| &g.0),
            "buffered": s.open.as_ref().map_or(0, |g| g.1.len()),
            "gestures": s.rays.keys().collect::<Vec<_>>(),
            "last_gesture": s.last,
            "pending_first": s.first,
            "events": s.log,
        })),
        "load_scenario" => {
            let doc = msg.get("scenario").ok_or_else(protocol)?;
            s.scenario = Scenario::parse(&doc.to_string()).map_err(hc)?;
            s.first = None;
            Ok(json!({ "scenario": v(&s.scenario) }))
        }
        "save_scenario" => {
            s.scenario.validate().map_err(hc)?;
            Ok(json!({ "scenario": v(&s.scenario), "path": null }))
        }
        "begin_gesture" => {
            if s.open.is_some() {
                return Err("GESTURE_STATE".into());
            }
            let gid = match opt_str(msg, "gesture_id")? {
                Some(g) if s.rays.contains_key(&g) => return Err("GESTURE_STATE".into()),
                Some(g) => g,
                None => loop {
                    s.counter += 1;
                    let g = format!("g{}", s.counter);
                    if !s.rays.contains_key(&g) {
                        break g;
                    }
                },
            };
            s.open = Some((gid.clone(), Vec::new()));
            Ok(json!({ "gesture_id": gid }))
        }
        "append_readings" => {
            let rows: Vec<TraceRow> =
                serde_json::from_value(msg.get("readings").cloned().ok_or_else(protocol)?)
                    .map_err(|_| protocol())?;
            let open = s.open.as_mut().ok_or("GESTURE_STATE")?;
            for r in &rows {
                open.1.push(r.to_reading().map_err(ec)?);
            }
            Ok(json!({ "gesture_id": open.0, "appended": rows.len(), "buffered": open.1.len() }))
        }
        "end_gesture" => {
            let (gid, readings) = s.open.take().ok_or("GESTURE_STATE")?;
            let ray = estimate_from_readings(&readings, &KalmanConfig::default()).map_err(ec)?;
            let q = gesture_quality(&ray);
            let out = json!({
                "gesture_id": gid,
                "origin": v(&ray.origin()),
                "direction": v(&ray.direction),
                "samples": ray.samples.len(),
                "net_displacement_m": ray.net_displacement,
                "mean_speed_mps": ray.mean_speed,
                "explained_variance_ratio": ray.explained_variance_ratio,
                "quality": v(&q),
                "flags": q.flag_names(),
                "path": ray.samples.positions().map(|p| v(&p)).collect::<Vec<_>>(),
            });
            s.rays.insert(gid.clone(), ray);
            s.last = Some(gid);
            Ok(out)
        }
        "simulate_gesture" => {
            let user: [f64; 3] =
                serde_json::from_value(msg["user"].clone()).map_err(|_| protocol())?;
            let target = match (msg.get("toward"), opt_str(msg, "device")?) {
                (Some(t), None) => Vec3::from(
                    serde_json::from_value::<[f64; 3]>(t.clone()).map_err(|_| protocol())?,
                ),
                (None, Some(dev)) => {
                    s.scenario
                        .catalog()
                        .map_err(hc)?
                        .get(&dev)
                        .map_err(ec)?
                        .position
                }
                _ => return Err(protocol()),
            };
            let seed = msg
                .get("seed")
                .and_then(Value::as_u64)
                .unwrap_or(s.scenario.noise.seed.wrapping_add(s.sims));
            let req = GestureRequest {
                seed: Some(seed),
                ..GestureRequest::new(Vec3::from(user), target)
            };
            let spec = req.spec(&s.scenario).map_err(hc)?;
            let g = req.simulate(&s.scenario).map_err(hc)?;
            s.sims += 1;
            let rows: Vec<TraceRow> = g.readings.iter().map(TraceRow::from_reading).collect();
            Ok(json!({
                "seed": seed,
                "spec": v(&spec),
                "readings": v(&rows),
                "truth": v(&g.truth.samples()),
            }))
        }
        "register_first" => {
            let (gid, ray) = s.ray(opt_str(msg, "gesture")?)?;
            s.first = Some(gid.clone());
            Ok(
                json!({ "gesture_id": gid, "origin": v(&ray.origin()), "direction": v(&ray.direction) }),
            )
        }
        "register_second" => {
            let first = s.first.clone().ok_or("NO_GESTURE")?;
            let (fid, r1) = s.ray(Some(first))?;
            let (sid, r2) = s.ray(opt_str(msg, "gesture")?)?;
            let at = r2.samples.samples().last().map_or(0.0, |x| x.timestamp);
            let sep = user_separation_check(r1.origin(), r2.origin());
            let attempt = RegistrationAttempt::new(r1, r2);
            let mut catalog = s.scenario.catalog().map_err(hc)?;
            let label = opt_str(msg, "label")?.unwrap_or_else(|| "device".into());
            let outcome = match opt_str(msg, "device_id")? {
                Some(dev) => catalog.update(&dev, &attempt, &RegistrationPolicy::default(), at),
                None => catalog.register(&label, &attempt, &RegistrationPolicy::default(), at),
            }
            .map_err(ec)?;
            if let RegistrationOutcome::Registered(_) = outcome {
                s.scenario.set_catalog(&catalog);
                s.scenario.validate().map_err(hc)?;
                s.first = None;
            }
            Ok(
                json!({ "first": fid, "second": sid, "outcome": v(&outcome), "separation": v(&sep) }),
            )
        }
        "select" => {
            let (gid, ray) = s.ray(opt_str(msg, "gesture")?)?;
            let catalog = s.scenario.catalog().map_err(hc)?;
            let result = select(&ray, catalog.list()).map_err(ec)?;
            Ok(json!({ "gesture_id": gid, "selection": v(&result) }))
        }
        "run_sweep" => {
            let mut body = msg.clone();
            let obj = body.as_object_mut().unwrap();
            for k in ["type", "session", "request_id", "protocol_version"] {
                obj.remove(k);
            }
            let req: SweepRequest = serde_json::from_value(body).map_err(|_| protocol())?;
            let report = run_sweep(&req, &s.scenario).map_err(hc)?;
            Ok(json!({ "report": v(&report), "csv": report.to_csv() }))
        }
        _ => Err(protocol()),
    }
}

/// Compares a gateway reply with the reference expectation.
pub fn check_reply(reply: &Value, expected: &Expected, msg: &Value) {
    assert_eq!(reply["request_id"], msg["request_id"], "request_id echo");
    assert_eq!(reply["protocol_version"], json!(1));
    match expected {
        Ok(result) => {
            assert_eq!(reply["ok"], json!(true), "{msg}\n-> {reply}");
            assert_eq!(
                &reply["result"], result,
                "result mismatch for {}",
                msg["type"]
            );
        }
        Err(code) => {
            assert_eq!(reply["ok"], json!(false), "{msg}\n-> {reply}");
            assert_eq!(reply["error"]["code"], json!(code), "{msg}\n-> {reply}");
            assert!(reply["error"]["message"]
                .as_str()
                .is_some_and(|m| !m.is_empty()));
        }
    }
}
