//! Session service over the pointing engine.
//!
//! [`Gateway::handle`] turns one request object into one reply and is
//! independent of the transport; [`transport`] carries requests over TCP as
//! length-prefixed JSON frames.

pub mod error;
pub mod protocol;
pub mod session;
pub mod transport;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use pointsel_harness::Scenario;
use serde_json::{json, Map, Value};

pub use error::{ErrorBody, GatewayError};
pub use protocol::{LogEntry, RaySummary, Reply, Request, PROTOCOL_VERSION};
pub use session::Session;

fn relock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Envelope fields stripped off before the body is decoded.
struct Envelope {
    request_id: Value,
    session: Option<String>,
    kind: Value,
}

#[derive(Debug)]
pub struct Gateway {
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_session: AtomicU64,
    scenario_dir: Option<PathBuf>,
}

impl Default for Gateway {
    fn default() -> Self {
        Gateway::new(None)
    }
}

impl Gateway {
    pub fn new(scenario_dir: Option<PathBuf>) -> Self {
        Gateway {
            sessions: Mutex::new(BTreeMap::new()),
            next_session: AtomicU64::new(1),
            scenario_dir,
        }
    }

    pub fn session_count(&self) -> usize {
        relock(&self.sessions).len()
    }

    /// Handles one frame's text. Malformed JSON still gets a reply.
    pub fn handle_text(&self, text: &str) -> String {
        let reply = match serde_json::from_str::<Value>(text) {
            Ok(v) => self.handle(v),
            Err(e) => error_reply(
                Value::Null,
                None,
                Value::Null,
                &GatewayError::Protocol(format!("invalid JSON: {e}")),
            ),
        };
        serde_json::to_string(&reply).expect("reply serialises")
    }

    pub fn handle(&self, message: Value) -> Reply {
        let mut obj = match message {
            Value::Object(o) => o,
            _ => {
                return error_reply(
                    Value::Null,
                    None,
                    Value::Null,
                    &GatewayError::Protocol("message must be a JSON object".into()),
                )
            }
        };
        let env = match envelope(&mut obj) {
            Ok(env) => env,
            Err((env, e)) => return error_reply(env.request_id, env.session, env.kind, &e),
        };
        let req: Request = match serde_json::from_value(Value::Object(obj)) {
            Ok(r) => r,
            Err(e) => {
                return error_reply(
                    env.request_id,
                    env.session,
                    env.kind,
                    &GatewayError::Protocol(e.to_string()),
                )
            }
        };
        match self.dispatch(&env, req) {
            Ok((session, result)) => Reply {
                protocol_version: PROTOCOL_VERSION,
                request_id: env.request_id,
                session: Some(session),
                kind: env.kind,
                ok: true,
                result: Some(result),
                error: None,
            },
            Err(e) => error_reply(env.request_id, env.session, env.kind, &e),
        }
    }

    fn dispatch(&self, env: &Envelope, req: Request) -> Result<(String, Value), GatewayError> {
        let kind = req.kind();
        if let Request::CreateSession { scenario } = req {
            if env.session.is_some() {
                return Err(GatewayError::Protocol(
                    "create_session must not name a session".into(),
                ));
            }
            let scenario = match scenario {
                Some(doc) => Scenario::parse(&doc.to_string())?,
                None => Scenario::default(),
            };
            let id = format!("s-{}", self.next_session.fetch_add(1, Ordering::Relaxed));
            let mut session = Session::new(id.clone(), scenario);
            session.log.push(LogEntry {
                request_id: env.request_id.clone(),
                kind: kind.into(),
                ok: true,
                code: None,
            });
            let result = json!({ "session": id, "scenario": session.scenario });
            relock(&self.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
            return Ok((id, result));
        }

        let id = env
            .session
            .clone()
            .ok_or_else(|| GatewayError::Protocol(format!("{kind} requires a session")))?;
        if let Request::CloseSession {} = req {
            return match relock(&self.sessions).remove(&id) {
                Some(_) => Ok((id, json!({ "closed": true }))),
                None => Err(GatewayError::UnknownSession(id)),
            };
        }
        let handle = relock(&self.sessions)
            .get(&id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownSession(id.clone()))?;
        // The map lock is released here: sessions proceed independently.
        let mut session = relock(&handle);
        let outcome = session.apply(req, self.scenario_dir.as_deref());
        session.log.push(LogEntry {
            request_id: env.request_id.clone(),
            kind: kind.into(),
            ok: outcome.is_ok(),
            code: outcome.as_ref().err().map(|e| e.code().to_string()),
        });
        outcome.map(|v| (id, v))
    }
}

fn envelope(obj: &mut Map<String, Value>) -> Result<Envelope, (Envelope, GatewayError)> {
    let request_id = obj.remove("request_id");
    let version = obj.remove("protocol_version");
    let session = obj.remove("session");
    let mut env = Envelope {
        request_id: request_id.clone().unwrap_or(Value::Null),
        session: None,
        kind: obj.get("type").cloned().unwrap_or(Value::Null),
    };
    match session {
        None | Some(Value::Null) => {}
        Some(Value::String(s)) => env.session = Some(s),
        Some(other) => {
            return Err((
                env,
                GatewayError::Protocol(format!("session must be a string, got {other}")),
            ))
        }
    }
    if request_id.is_none() {
        return Err((env, GatewayError::Protocol("missing request_id".into())));
    }
    match version {
        None => {}
        Some(v) if v.as_u64() == Some(PROTOCOL_VERSION) => {}
        Some(v) => return Err((env, GatewayError::UnsupportedProtocol(v))),
    }
    Ok(env)
}

pub(crate) fn error_reply(
    request_id: Value,
    session: Option<String>,
    kind: Value,
    e: &GatewayError,
) -> Reply {
    Reply {
        protocol_version: PROTOCOL_VERSION,
        request_id,
        session,
        kind,
        ok: false,
        result: None,
        error: Some(e.body()),
    }
}
