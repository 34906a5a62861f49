use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

/// Machine-readable outcome of one command. Field order is fixed by the
/// struct; nested objects are emitted with sorted keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub inputs_digest: String,
    pub parameters: Value,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl Report {
    pub fn ok(command: &str, digest: String, parameters: Value, results: Value) -> Self {
        Self {
            command: command.into(),
            status: Status::Ok,
            inputs_digest: digest,
            parameters,
            results,
            error: None,
            generated_at: None,
        }
    }

    pub fn error(command: &str, digest: String, parameters: Value, err: &CliError) -> Self {
        Self {
            command: command.into(),
            status: Status::Error,
            inputs_digest: digest,
            parameters,
            results: Value::Object(Default::default()),
            error: Some(ErrorInfo {
                code: err.code().into(),
                message: err.to_string(),
            }),
            generated_at: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Serialized form: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Non-finite floats turn into `null` inside `serde_json::Value`, and
/// results never use `null` otherwise; reject any that appear.
pub fn ensure_finite(v: &Value) -> Result<(), CliError> {
    match v {
        Value::Null => Err(CliError::Core(dilation_core::Error::NonFinite)),
        Value::Array(items) => items.iter().try_for_each(ensure_finite),
        Value::Object(map) => map.values().try_for_each(ensure_finite),
        _ => Ok(()),
    }
}

/// SHA-256 over the length-prefixed contents of every input file, in order.
pub fn digest_inputs(inputs: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

pub fn save_report(report: &Report, path: Option<&Path>) -> Result<(), CliError> {
    let text = report.to_json();
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
