use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fingerprint, BackendKind, ClientError, CompletionBackend, EntryStatus, RawOutput, RunLogLine};
use crate::prompting::RenderedPrompt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayLine {
    pub fingerprint: String,
    pub raw: String,
}

/// Read-only map from prompt fingerprint to a recorded raw output.
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    outputs: HashMap<String, String>,
}

impl ReplayStore {
    pub fn from_lines(lines: impl IntoIterator<Item = ReplayLine>) -> Self {
        let mut outputs = HashMap::new();
        for l in lines {
            // First recording wins.
            outputs.entry(l.fingerprint).or_insert(l.raw);
        }
        Self { outputs }
    }

    /// Loads a JSONL store of `{"fingerprint": ..., "raw": ...}` lines. A
    /// run log is accepted too and read as by [`ReplayStore::from_run_log`].
    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = fs::read_to_string(path).map_err(|e| ClientError::Store(format!("{}: {e}", path.display())))?;
        let first = text.lines().find(|l| !l.trim().is_empty());
        if first.is_some_and(|l| serde_json::from_str::<RunLogLine>(l).is_ok()) {
            return Self::from_run_log(path);
        }
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: ReplayLine = serde_json::from_str(line)
                .map_err(|e| ClientError::Store(format!("{}:{}: {e}", path.display(), i + 1)))?;
            lines.push(l);
        }
        Ok(Self::from_lines(lines))
    }

    /// Rebuilds a store from the successful entries of a run log.
    pub fn from_run_log(path: &Path) -> Result<Self, ClientError> {
        let text = fs::read_to_string(path).map_err(|e| ClientError::Store(format!("{}: {e}", path.display())))?;
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RunLogLine = serde_json::from_str(line)
                .map_err(|e| ClientError::Store(format!("{}:{}: {e}", path.display(), i + 1)))?;
            if let RunLogLine::Entry(e) = parsed {
                if let (EntryStatus::Ok, Some(raw)) = (e.status, e.raw) {
                    lines.push(ReplayLine {
                        fingerprint: e.fingerprint,
                        raw,
                    });
                }
            }
        }
        Ok(Self::from_lines(lines))
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn contains(&self, fingerprint: &str) -> bool {
        self.outputs.contains_key(fingerprint)
    }

    /// JSONL with lines sorted by fingerprint.
    pub fn to_jsonl(&self) -> String {
        let mut keys: Vec<&String> = self.outputs.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let line = ReplayLine {
                fingerprint: k.clone(),
                raw: self.outputs[k].clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("line serializes"));
            out.push('\n');
        }
        out
    }
}

impl CompletionBackend for ReplayStore {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawOutput, ClientError> {
        let fp = fingerprint(&prompt.text);
        match self.outputs.get(&fp) {
            Some(raw) => Ok(RawOutput {
                id: prompt.id.clone(),
                fingerprint: fp,
                raw: raw.clone(),
                latency_ms: 0,
                backend: BackendKind::Replay,
            }),
            None => Err(ClientError::ReplayMiss {
                id: prompt.id.clone(),
                fingerprint: fp,
            }),
        }
    }
}
