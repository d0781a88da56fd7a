//! Completion backends: a live chat-completion endpoint and a replay store
//! of previously recorded outputs keyed by prompt fingerprint.

mod live;
mod replay;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::http::RetryPolicy;
use crate::pool::bounded_map;
use crate::prompting::RenderedPrompt;

pub use live::LiveBackend;
pub use replay::ReplayStore;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed completion response: {0}")]
    Protocol(String),
    #[error("no recorded output for `{id}` (fingerprint {fingerprint})")]
    ReplayMiss { id: String, fingerprint: String },
    #[error("invalid client config: {0}")]
    Config(String),
    #[error("replay store: {0}")]
    Store(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    /// Chat-completion URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(with = "crate::http::millis")]
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    /// Environment variable holding the API key, if the endpoint needs one.
    pub api_key_env: Option<String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "mistral-7b-instruct".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
            max_in_flight: 4,
            api_key_env: Some("HENT_API_KEY".into()),
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_in_flight < 1 {
            return Err(ClientError::Config("max_in_flight must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(ClientError::Config("timeout must be positive".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ClientError::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }
}

/// Stable hash of the prompt text (lowercase hex SHA-256).
pub fn fingerprint(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOutput {
    pub id: String,
    pub fingerprint: String,
    /// Backend text, untrimmed.
    pub raw: String,
    pub latency_ms: u64,
    pub backend: BackendKind,
}

pub trait CompletionBackend: Sync {
    fn kind(&self) -> BackendKind;
    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawOutput, ClientError>;
}

/// One line of a batch result: the output, or why there is none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub id: String,
    pub fingerprint: String,
    pub backend: BackendKind,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    Failed,
}

impl BatchEntry {
    pub fn is_ok(&self) -> bool {
        self.status == EntryStatus::Ok
    }

    pub fn output(&self) -> Option<RawOutput> {
        Some(RawOutput {
            id: self.id.clone(),
            fingerprint: self.fingerprint.clone(),
            raw: self.raw.clone()?,
            latency_ms: self.latency_ms,
            backend: self.backend,
        })
    }
}

/// Header line written to the run log before the entries of each batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLogHeader {
    pub event: String,
    pub backend: BackendKind,
    pub config: ClientConfig,
    pub prompts: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum RunLogLine {
    Header(RunLogHeader),
    Entry(BatchEntry),
}

pub fn complete(prompt: &RenderedPrompt, backend: &dyn CompletionBackend) -> Result<RawOutput, ClientError> {
    backend.complete(prompt)
}

/// Completes every prompt with at most `cfg.max_in_flight` requests
/// outstanding. Results are in input order; a failing prompt becomes a
/// failed entry. When `run_log` is given, a header and every entry are
/// appended to it before returning.
pub fn run_batch(
    prompts: &[RenderedPrompt],
    backend: &dyn CompletionBackend,
    cfg: &ClientConfig,
    run_log: Option<&Path>,
) -> Result<Vec<BatchEntry>, std::io::Error> {
    let entries = bounded_map(prompts, cfg.max_in_flight, |_, p| {
        let fp = fingerprint(&p.text);
        match backend.complete(p) {
            Ok(out) => BatchEntry {
                id: p.id.clone(),
                fingerprint: fp,
                backend: out.backend,
                status: EntryStatus::Ok,
                raw: Some(out.raw),
                latency_ms: out.latency_ms,
                error: None,
            },
            Err(e) => BatchEntry {
                id: p.id.clone(),
                fingerprint: fp,
                backend: backend.kind(),
                status: EntryStatus::Failed,
                raw: None,
                latency_ms: 0,
                error: Some(e.to_string()),
            },
        }
    });
    if let Some(path) = run_log {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut buf = String::new();
        let header = RunLogLine::Header(RunLogHeader {
            event: "run".into(),
            backend: backend.kind(),
            config: cfg.clone(),
            prompts: prompts.len(),
        });
        buf.push_str(&serde_json::to_string(&header).expect("header serializes"));
        buf.push('\n');
        for e in &entries {
            buf.push_str(&serde_json::to_string(&RunLogLine::Entry(e.clone())).expect("entry serializes"));
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
    }
    Ok(entries)
}
