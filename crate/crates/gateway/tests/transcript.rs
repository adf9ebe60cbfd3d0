//! Golden transcript: recorded requests and replies. Replaying the requests
//! must reproduce the recorded replies, and every reply must equal what the
//! libraries return when called directly.
//!
//! Re-record with
//! `cargo test -p pointsel-gateway --test transcript -- --ignored record`.

mod common;

use std::path::PathBuf;

use common::{check_reply, gesture_rows, room_json, rows_json, Reference};
use pointsel_core::Vec3;
use pointsel_gateway::Gateway;
use pointsel_harness::TraceRow;
use serde_json::{json, Value};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/transcript.jsonl")
}

/// Builds the scripted session. Requests that replay simulated readings take
/// them from earlier replies, as an interactive client would.
fn record_session(gw: &Gateway) -> Vec<(Value, Value)> {
    let mut log: Vec<(Value, Value)> = Vec::new();
    let mut send = |mut msg: Value| -> Value {
        msg["request_id"] = json!(log.len() + 1);
        let reply = serde_json::to_value(gw.handle(msg.clone())).unwrap();
        log.push((msg, reply.clone()));
        reply
    };
    let s1 = "s-1";
    let lamp = Vec3::new(3.0, 0.0, 5.0);
    let tv = Vec3::new(3.0, 1.5, 5.0);
    let user = Vec3::new(0.0, 0.0, 3.0);
    let plant = Vec3::new(2.0, 0.5, 6.0);
    let back = Vec3::new(-3.0, 0.0, 0.0);
    let at = |deg: f64| plant + back.rotated_about(Vec3::unit_y(), deg.to_radians());
    let (pos_a, pos_b, pos_c) = (at(15.0), at(-15.0), at(5.0));

    fn streamed(
        send: &mut dyn FnMut(Value) -> Value,
        session: &str,
        id: Option<&str>,
        rows: &[TraceRow],
        chunks: usize,
    ) -> Value {
        let mut begin = json!({ "type": "begin_gesture", "session": session });
        if let Some(id) = id {
            begin["gesture_id"] = json!(id);
        }
        send(begin);
        let size = rows.len().div_ceil(chunks);
        for chunk in rows.chunks(size) {
            send(
                json!({ "type": "append_readings", "session": session, "readings": rows_json(chunk) }),
            );
        }
        send(json!({ "type": "end_gesture", "session": session }))
    }

    send(json!({ "type": "create_session", "scenario": room_json() }));
    send(json!({ "type": "session_info", "session": s1 }));
    streamed(
        &mut send,
        s1,
        Some("lamp-1"),
        &gesture_rows(user, lamp, 1),
        4,
    );
    send(json!({ "type": "select", "session": s1 }));
    streamed(&mut send, s1, None, &gesture_rows(user, tv, 2), 2);
    send(json!({ "type": "select", "session": s1 }));
    send(json!({ "type": "select", "session": s1, "gesture": "lamp-1" }));
    send(json!({ "type": "append_readings", "session": s1, "readings": [] }));
    send(json!({ "type": "teleport", "session": s1 }));
    send(json!({ "type": "select", "session": s1, "gesture": 5 }));
    send(json!({ "type": "select", "session": "s-99" }));

    streamed(
        &mut send,
        s1,
        Some("reg-a"),
        &gesture_rows(pos_a, plant, 3),
        1,
    );
    send(json!({ "type": "register_first", "session": s1 }));
    streamed(
        &mut send,
        s1,
        Some("reg-c"),
        &gesture_rows(pos_c, plant, 4),
        1,
    );
    send(json!({ "type": "register_second", "session": s1, "label": "plant" }));
    streamed(
        &mut send,
        s1,
        Some("reg-b"),
        &gesture_rows(pos_b, plant, 5),
        1,
    );
    send(json!({ "type": "register_second", "session": s1, "label": "plant" }));

    let sim = send(
        json!({ "type": "simulate_gesture", "session": s1, "user": [0.0, 0.0, 3.0], "device": "dev-0004", "seed": 11 }),
    );
    let rows: Vec<TraceRow> = serde_json::from_value(sim["result"]["readings"].clone()).unwrap();
    streamed(&mut send, s1, None, &rows, 2);
    send(json!({ "type": "select", "session": s1 }));
    send(json!({ "type": "save_scenario", "session": s1 }));

    let s2 = "s-2";
    send(json!({ "type": "create_session" }));
    let sim = send(
        json!({ "type": "simulate_gesture", "session": s2, "user": [0.0, 0.0, 3.0], "toward": [1.0, 0.0, 5.0] }),
    );
    let rows: Vec<TraceRow> = serde_json::from_value(sim["result"]["readings"].clone()).unwrap();
    streamed(&mut send, s2, None, &rows, 1);
    send(json!({ "type": "select", "session": s2 }));
    send(json!({ "type": "load_scenario", "session": s2, "scenario": room_json() }));
    send(json!({ "type": "select", "session": s2 }));
    send(json!({ "type": "end_gesture", "session": s2 }));
    send(
        json!({ "type": "run_sweep", "session": s1, "axis": "displacement", "trials": 5, "seed": 3, "grid": [0.1, 0.2] }),
    );
    send(json!({ "type": "session_info", "session": s1 }));
    send(json!({ "type": "close_session", "session": s2 }));
    log
}

fn load() -> Vec<(Value, Value)> {
    let text = std::fs::read_to_string(fixture()).expect("transcript fixture");
    text.lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["request"].clone(), v["reply"].clone())
        })
        .collect()
}

#[test]
#[ignore = "rewrites the fixture"]
fn record() {
    let log = record_session(&Gateway::new(None));
    let mut out = String::new();
    for (req, reply) in &log {
        out.push_str(&json!({ "request": req, "reply": reply }).to_string());
        out.push('\n');
    }
    std::fs::write(fixture(), out).unwrap();
}

#[test]
fn recorded_script_is_fifty_messages_and_exercises_each_outcome() {
    let t = load();
    assert_eq!(t.len(), 50);
    let kinds: Vec<&str> = t.iter().filter_map(|(q, _)| q["type"].as_str()).collect();
    for k in [
        "create_session",
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
        "close_session",
    ] {
        assert!(kinds.contains(&k), "{k} missing");
    }
    let outcomes: Vec<&Value> = t
        .iter()
        .map(|(_, r)| &r["result"]["outcome"]["outcome"])
        .collect();
    assert!(outcomes.contains(&&json!("guidance_needed")));
    assert!(outcomes.contains(&&json!("registered")));
    let codes: Vec<&Value> = t.iter().map(|(_, r)| &r["error"]["code"]).collect();
    for c in [
        "EMPTY_CATALOG",
        "PROTOCOL_ERROR",
        "GESTURE_STATE",
        "UNKNOWN_SESSION",
    ] {
        assert!(codes.contains(&&json!(c)), "{c} missing");
    }
}

#[test]
fn replay_matches_recording() {
    let gw = Gateway::new(None);
    for (req, recorded) in load() {
        let reply = serde_json::to_value(gw.handle(req.clone())).unwrap();
        assert_eq!(reply, recorded, "request {}", req["request_id"]);
    }
}

#[test]
fn replay_matches_direct_library_calls() {
    let gw = Gateway::new(None);
    let mut reference = Reference::default();
    for (req, _) in load() {
        let reply = serde_json::to_value(gw.handle(req.clone())).unwrap();
        check_reply(&reply, &reference.expect(&req), &req);
    }
}
