use pointsel_core::Error as EngineError;
use pointsel_harness::HarnessError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Everything a request can fail with. Engine and harness errors keep their
/// own variants so each maps to exactly one wire code.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("unsupported protocol_version {0} (supported: 1)")]
    UnsupportedProtocol(Value),

    #[error("unknown session {0:?}")]
    UnknownSession(String),

    #[error("{0}")]
    GestureState(String),

    #[error("{0}")]
    NoGesture(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("reading {index}: {source}")]
    Reading { index: usize, source: EngineError },

    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl From<EngineError> for GatewayError {
    fn from(e: EngineError) -> Self {
        GatewayError::Harness(HarnessError::Engine(e))
    }
}

/// Wire form of a failed request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

fn engine_code(e: &EngineError) -> (&'static str, Value) {
    match e {
        EngineError::InvalidReading(_) => ("INVALID_READING", Value::Null),
        EngineError::DegeneratePosition => ("DEGENERATE_POSITION", Value::Null),
        EngineError::ParallelRays { cross_norm } => {
            ("PARALLEL_RAYS", json!({ "cross_norm": cross_norm }))
        }
        EngineError::Ordering { index } => ("ORDERING", json!({ "index": index })),
        EngineError::InsufficientData { got, need } => {
            ("INSUFFICIENT_DATA", json!({ "got": got, "need": need }))
        }
        EngineError::GestureTooShort {
            displacement_m,
            floor_m,
        } => (
            "GESTURE_TOO_SHORT",
            json!({ "displacement_m": displacement_m, "floor_m": floor_m }),
        ),
        EngineError::DegenerateGeometry { sample, distance_m } => (
            "DEGENERATE_GEOMETRY",
            json!({ "sample": sample, "distance_m": distance_m }),
        ),
        EngineError::EmptyCatalog => ("EMPTY_CATALOG", Value::Null),
        EngineError::NotFound(id) => ("NOT_FOUND", json!({ "id": id })),
        EngineError::DuplicateId(id) => ("DUPLICATE_ID", json!({ "id": id })),
        EngineError::OutOfFov { index } => ("OUT_OF_FOV", json!({ "index": index })),
        EngineError::InvalidParameter(_) => ("INVALID_PARAMETER", Value::Null),
    }
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        self.code_and_detail().0
    }

    fn code_and_detail(&self) -> (&'static str, Value) {
        match self {
            GatewayError::Protocol(_) => ("PROTOCOL_ERROR", Value::Null),
            GatewayError::UnsupportedProtocol(v) => (
                "UNSUPPORTED_PROTOCOL",
                json!({ "found": v, "supported": 1 }),
            ),
            GatewayError::UnknownSession(id) => ("UNKNOWN_SESSION", json!({ "session": id })),
            GatewayError::GestureState(_) => ("GESTURE_STATE", Value::Null),
            GatewayError::NoGesture(_) => ("NO_GESTURE", Value::Null),
            GatewayError::InvalidPath(_) => ("INVALID_PATH", Value::Null),
            GatewayError::Reading { index, source } => {
                let (code, _) = engine_code(source);
                (code, json!({ "index": index }))
            }
            GatewayError::Harness(h) => match h {
                HarnessError::Parse { line, field, .. } => {
                    ("PARSE_ERROR", json!({ "line": line, "field": field }))
                }
                HarnessError::UnsupportedVersion { found, supported } => (
                    "UNSUPPORTED_VERSION",
                    json!({ "found": found, "supported": supported }),
                ),
                HarnessError::Scenario(_) => ("INVALID_SCENARIO", Value::Null),
                HarnessError::Experiment(_) => ("INVALID_EXPERIMENT", Value::Null),
                HarnessError::Engine(e) => engine_code(e),
                HarnessError::Json(_) => ("PARSE_ERROR", Value::Null),
                HarnessError::Io(_) => ("IO_ERROR", Value::Null),
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (code, detail) = self.code_and_detail();
        ErrorBody {
            code: code.to_string(),
            message: self.to_string(),
            detail,
        }
    }
}

pub type Result<T> = std::result::Result<T, GatewayError>;
