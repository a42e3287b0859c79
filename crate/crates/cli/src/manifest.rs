use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use mhelm::KernelParams;

/// Sidecar record describing how an output file was produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<KernelParams>,
    inputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    version: String,
    started: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    finished: Option<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, params: Option<KernelParams>, inputs: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            params,
            inputs,
            seed,
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            started: now(),
            finished: None,
        }
    }

    pub fn finish(mut self) -> Self {
        self.finished = Some(now());
        self
    }
}
