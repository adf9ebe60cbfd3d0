use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unsupported format_version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid experiment: {0}")]
    Experiment(String),

    #[error(transparent)]
    Engine(#[from] pointsel_core::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub(crate) fn parse(line: usize, field: &str, message: impl Into<String>) -> Self {
        HarnessError::Parse {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
