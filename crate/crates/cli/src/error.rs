use serde::Serialize;
use war_core::WarError;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Failure reported as JSON on stderr.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(skip)]
    pub code: i32,
    pub error: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            error: "usage".into(),
            message: message.into(),
        }
    }

    pub fn data(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            error: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.error,
            "message": self.message,
            "exit_code": self.code,
        })
        .to_string()
    }
}

impl From<WarError> for CliError {
    fn from(e: WarError) -> Self {
        let code = match e {
            WarError::InvalidArgument(_) => EXIT_USAGE,
            ref e if e.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            error: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data("io-error", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
