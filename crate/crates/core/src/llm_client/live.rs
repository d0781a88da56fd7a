use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};

use super::{fingerprint, BackendKind, ClientConfig, ClientError, CompletionBackend, RawOutput};
use crate::http::{retry, Attempt, HttpResponse, HttpTransport, TransportError};
use crate::prompting::RenderedPrompt;

/// OpenAI-style chat-completion client.
pub struct LiveBackend {
    cfg: ClientConfig,
    transport: Arc<dyn HttpTransport>,
    api_key: Option<String>,
}

enum Failure {
    Transport(TransportError),
    Status(HttpResponse),
}

impl LiveBackend {
    pub fn new(cfg: ClientConfig, transport: Arc<dyn HttpTransport>) -> Result<Self, ClientError> {
        cfg.validate()?;
        let api_key = cfg
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|k| !k.is_empty());
        Ok(Self {
            cfg,
            transport,
            api_key,
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn request_body(&self, prompt: &str) -> String {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        })
        .to_string()
    }

    fn headers(&self) -> Vec<(String, String)> {
        let mut h = vec![("content-type".to_string(), "application/json".to_string())];
        if let Some(k) = &self.api_key {
            h.push(("authorization".into(), format!("Bearer {k}")));
        }
        h
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

/// Pulls the completion text out of a chat or plain completion response.
fn completion_text(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::Protocol(format!("{e}: {}", excerpt(body))))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ClientError::Protocol(format!("no choices: {}", excerpt(body))))?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(String::from)
        .ok_or_else(|| ClientError::Protocol(format!("no completion text: {}", excerpt(body))))
}

impl CompletionBackend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawOutput, ClientError> {
        let body = self.request_body(&prompt.text);
        let headers = self.headers();
        let started = Instant::now();
        let resp = retry(&self.cfg.retry, |_| {
            match self
                .transport
                .post_json(&self.cfg.endpoint, &headers, &body, self.cfg.timeout)
            {
                Ok(r) if r.is_success() => Attempt::Done(r),
                Ok(r) if r.status >= 500 || r.status == 429 => Attempt::Retry(Failure::Status(r)),
                Ok(r) => Attempt::Fail(Failure::Status(r)),
                Err(e) => Attempt::Retry(Failure::Transport(e)),
            }
        })
        .map_err(|(f, attempts, _)| match f {
            Failure::Status(r) => ClientError::Http {
                status: r.status,
                excerpt: excerpt(&r.body),
            },
            Failure::Transport(TransportError::Timeout) => ClientError::Timeout { attempts },
            Failure::Transport(e) => ClientError::Transport {
                attempts,
                message: e.to_string(),
            },
        })?;
        let raw = completion_text(&resp.body)?;
        Ok(RawOutput {
            id: prompt.id.clone(),
            fingerprint: fingerprint(&prompt.text),
            raw,
            latency_ms: started.elapsed().as_millis() as u64,
            backend: BackendKind::Live,
        })
    }
}
