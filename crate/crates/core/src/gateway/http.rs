//! OpenAI-compatible chat-completion and embedding clients.

use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse, Embedder, FinishReason, TokenUsage};
use crate::domain::Role;

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

fn classify(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Io(_)
        | ureq::Error::Timeout(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::BodyStalled => BackendError::Transient(err.to_string()),
        other => BackendError::Permanent(other.to_string()),
    }
}

fn post_json(agent: &ureq::Agent, url: &str, api_key: Option<&str>, body: &Value) -> Result<Value, BackendError> {
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(key) = api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.send_json(body).map_err(classify)?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(classify)?;
    match status {
        200..=299 => serde_json::from_str(&text)
            .map_err(|e| BackendError::Permanent(format!("malformed response body: {e}"))),
        408 | 409 | 429 | 500..=599 => Err(BackendError::Transient(format!("HTTP {status}: {}", snippet(&text)))),
        _ => Err(BackendError::Permanent(format!("HTTP {status}: {}", snippet(&text)))),
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

#[derive(Debug, Clone)]
pub struct OpenAiCompatBackend {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl OpenAiCompatBackend {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        Self::with_timeout(base_url, model, api_key, Duration::from_secs(600))
    }

    pub fn with_timeout(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Self {
        OpenAiCompatBackend {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            agent: agent(timeout),
        }
    }

    /// Wire body for a request. Tool turns are sent as user messages because
    /// the endpoint is not assumed to support native tool calling.
    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut messages = Vec::with_capacity(2 + request.turns.len());
        if !request.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_text}));
        }
        messages.push(json!({"role": "user", "content": request.user_text}));
        for turn in &request.turns {
            let role = match turn.role() {
                Role::Assistant => "assistant",
                Role::System => "system",
                Role::User | Role::Tool => "user",
            };
            messages.push(json!({"role": role, "content": turn.content()}));
        }
        let mut body = json!({
            "model": self.model,
            "messages": messages,
            "temperature": request.decode_params.temperature,
            "max_tokens": request.decode_params.max_tokens,
        });
        if let Some(seed) = request.decode_params.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

pub(crate) fn parse_chat_response(v: &Value) -> Result<ChatResponse, BackendError> {
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::Permanent("response has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("stop") | None => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        Some("error") => FinishReason::Error,
        Some(other) => FinishReason::Other(other.to_string()),
    };
    let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64).unwrap_or(0);
    Ok(ChatResponse {
        text,
        finish_reason,
        token_usage: TokenUsage {
            prompt: usage("prompt_tokens"),
            completion: usage("completion_tokens"),
        },
    })
}

impl ChatBackend for OpenAiCompatBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let url = format!("{}/chat/completions", self.base_url);
        let v = post_json(&self.agent, &url, self.api_key.as_deref(), &self.request_body(request))?;
        parse_chat_response(&v)
    }
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    base_url: String,
    model: String,
    api_key: Option<String>,
    dimension: usize,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>, dimension: usize) -> Self {
        HttpEmbedder {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            dimension,
            agent: agent(Duration::from_secs(120)),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = json!({"model": self.model, "input": text});
        let v = post_json(&self.agent, &url, self.api_key.as_deref(), &body)?;
        let vector: Vec<f64> = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Permanent("response has no embedding".into()))?
            .iter()
            .map(|x| x.as_f64().unwrap_or(0.0))
            .collect();
        if vector.len() != self.dimension {
            return Err(BackendError::Permanent(format!(
                "expected dimension {}, got {}",
                self.dimension,
                vector.len()
            )));
        }
        Ok(vector)
    }
}
