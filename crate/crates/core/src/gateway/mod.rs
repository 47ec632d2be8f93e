//! Single entry point for every model call.
//!
//! A [`Gateway`] routes each [`ChatRequest`] to the backend configured for its
//! [`RoleTag`], retries transient failures with exponential backoff, and keeps
//! the usage counters that reports are built from.

mod embedding;
mod http;
mod scripted;
mod tool_loop;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{Message, UsageCounters};
use crate::parallel::bounded_map;

pub use embedding::{cosine, HashEmbedder, HASH_EMBEDDING_VERSION};
pub use http::{HttpEmbedder, OpenAiCompatBackend};
pub use scripted::{MockScript, ScriptedBackend, ScriptedReply};
pub use tool_loop::{
    parse_tool_call, ToolError, ToolHandler, ToolLoopError, ToolLoopOutput, ToolLoopStep, ToolOutcome,
    TranscriptEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleTag {
    Extractor,
    Generator,
    Summarizer,
    ClusterManager,
    ClusterAnalyzer,
    Proposer,
    Judge,
}

impl RoleTag {
    pub const ALL: [RoleTag; 7] = [
        RoleTag::Extractor,
        RoleTag::Generator,
        RoleTag::Summarizer,
        RoleTag::ClusterManager,
        RoleTag::ClusterAnalyzer,
        RoleTag::Proposer,
        RoleTag::Judge,
    ];

    /// Roles whose calls exist only to optimize the prompt.
    pub fn is_optimizer(self) -> bool {
        matches!(
            self,
            RoleTag::Summarizer | RoleTag::ClusterManager | RoleTag::ClusterAnalyzer | RoleTag::Proposer
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::Extractor => "extractor",
            RoleTag::Generator => "generator",
            RoleTag::Summarizer => "summarizer",
            RoleTag::ClusterManager => "cluster_manager",
            RoleTag::ClusterAnalyzer => "cluster_analyzer",
            RoleTag::Proposer => "proposer",
            RoleTag::Judge => "judge",
        }
    }
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DecodeParams {
    /// Unvalidated defaults: 0.0 for the judge, 0.7 for every other role.
    pub fn default_for(role: RoleTag) -> Self {
        DecodeParams {
            temperature: if role == RoleTag::Judge { 0.0 } else { 0.7 },
            max_tokens: 4096,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role_tag: RoleTag,
    pub system_text: String,
    pub user_text: String,
    /// Follow-up turns after the user message (tool-loop history).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub turns: Vec<Message>,
    pub decode_params: DecodeParams,
}

impl ChatRequest {
    pub fn new(role_tag: RoleTag, system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        ChatRequest {
            role_tag,
            system_text: system_text.into(),
            user_text: user_text.into(),
            turns: Vec::new(),
            decode_params: DecodeParams::default_for(role_tag),
        }
    }

    /// Stable content fingerprint; decode parameters do not participate.
    pub fn fingerprint(&self) -> String {
        fingerprint(&self.system_text, &self.user_text, &self.turns)
    }
}

/// Hex SHA-256 over the system text, user text and any follow-up turns.
pub fn fingerprint(system_text: &str, user_text: &str, turns: &[Message]) -> String {
    let mut h = Sha256::new();
    h.update(system_text.as_bytes());
    h.update([0x1f]);
    h.update(user_text.as_bytes());
    for turn in turns {
        h.update([0x1e]);
        h.update(turn.role().as_str().as_bytes());
        h.update([b':']);
        h.update(turn.content().as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt: u64,
    pub completion: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub token_usage: TokenUsage,
}

impl ChatResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        ChatResponse {
            text: text.into(),
            finish_reason: FinishReason::Stop,
            token_usage: TokenUsage::default(),
        }
    }
}

/// Failure reported by a backend. Only `Transient` failures are retried.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Permanent(String),
}

pub trait ChatBackend: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("no endpoint configured for role {0}")]
    EndpointUnavailable(RoleTag),
    #[error("{role} request failed after {attempts} attempts: {last_error}")]
    BudgetExceeded {
        role: RoleTag,
        attempts: u32,
        last_error: String,
    },
    #[error("{0} returned an empty response")]
    ResponseEmpty(RoleTag),
    #[error("{role} request failed: {message}")]
    Backend { role: RoleTag, message: String },
    #[error("no embedding endpoint configured")]
    EmbeddingUnavailable,
    #[error("embedding request failed: {0}")]
    Embedding(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            backoff_base: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (1-based): `base * 2^(retry-1)`.
    pub fn delay(&self, retry: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32 << (retry.saturating_sub(1)).min(16))
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Default)]
struct Counters {
    optimization: AtomicU64,
    evaluation: AtomicU64,
    extraction: AtomicU64,
    judge: AtomicU64,
}

pub struct Gateway {
    routes: HashMap<RoleTag, Arc<dyn ChatBackend>>,
    decode: HashMap<RoleTag, DecodeParams>,
    embedder: Option<Arc<dyn Embedder>>,
    retry: RetryPolicy,
    counters: Counters,
    started: Instant,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("roles", &self.routes.keys().collect::<Vec<_>>())
            .field("has_embedder", &self.embedder.is_some())
            .field("retry", &self.retry)
            .finish()
    }
}

#[derive(Default)]
pub struct GatewayBuilder {
    routes: HashMap<RoleTag, Arc<dyn ChatBackend>>,
    decode: HashMap<RoleTag, DecodeParams>,
    embedder: Option<Arc<dyn Embedder>>,
    retry: RetryPolicy,
}

impl GatewayBuilder {
    pub fn route(mut self, role: RoleTag, backend: Arc<dyn ChatBackend>) -> Self {
        self.routes.insert(role, backend);
        self
    }

    /// Routes every role to the same backend.
    pub fn route_all(mut self, backend: Arc<dyn ChatBackend>) -> Self {
        for role in RoleTag::ALL {
            self.routes.insert(role, backend.clone());
        }
        self
    }

    pub fn decode(mut self, role: RoleTag, params: DecodeParams) -> Self {
        self.decode.insert(role, params);
        self
    }

    pub fn embedder(mut self, embedder: Arc<dyn Embedder>) -> Self {
        self.embedder = Some(embedder);
        self
    }

    pub fn retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn build(self) -> Gateway {
        Gateway {
            routes: self.routes,
            decode: self.decode,
            embedder: self.embedder,
            retry: self.retry,
            counters: Counters::default(),
            started: Instant::now(),
        }
    }
}

impl Gateway {
    pub fn builder() -> GatewayBuilder {
        GatewayBuilder::default()
    }

    /// Builds a request carrying the decode parameters configured for `role`.
    pub fn request(&self, role: RoleTag, system_text: impl Into<String>, user_text: impl Into<String>) -> ChatRequest {
        let mut req = ChatRequest::new(role, system_text, user_text);
        if let Some(p) = self.decode.get(&role) {
            req.decode_params = *p;
        }
        req
    }

    pub fn has_route(&self, role: RoleTag) -> bool {
        self.routes.contains_key(&role)
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let role = request.role_tag;
        let backend = self.routes.get(&role).ok_or(GatewayError::EndpointUnavailable(role))?;
        self.count(role);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match backend.chat(request) {
                Ok(resp) => {
                    if resp.finish_reason != FinishReason::Error && resp.text.trim().is_empty() {
                        return Err(GatewayError::ResponseEmpty(role));
                    }
                    return Ok(resp);
                }
                Err(BackendError::Permanent(message)) => return Err(GatewayError::Backend { role, message }),
                Err(BackendError::Transient(msg)) => {
                    if attempt > self.retry.max_retries {
                        return Err(GatewayError::BudgetExceeded {
                            role,
                            attempts: attempt,
                            last_error: msg,
                        });
                    }
                    log::debug!("{role} attempt {attempt} failed transiently: {msg}");
                    let delay = self.retry.delay(attempt);
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                }
            }
        }
    }

    /// Completes every request with at most `max_in_flight` outstanding.
    /// Errors are returned in place; siblings are unaffected.
    pub fn complete_many(
        &self,
        requests: &[ChatRequest],
        max_in_flight: usize,
    ) -> Vec<Result<ChatResponse, GatewayError>> {
        bounded_map(requests, max_in_flight, |_, r| self.complete(r))
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("cannot embed empty text".into()));
        }
        let embedder = self.embedder.as_ref().ok_or(GatewayError::EmbeddingUnavailable)?;
        embedder.embed(text).map_err(|e| GatewayError::Embedding(e.to_string()))
    }

    pub fn embedding_dimension(&self) -> Option<usize> {
        self.embedder.as_ref().map(|e| e.dimension())
    }

    pub fn usage(&self) -> UsageCounters {
        UsageCounters {
            optimization_llm_calls: self.counters.optimization.load(Ordering::SeqCst),
            evaluation_calls: self.counters.evaluation.load(Ordering::SeqCst),
            extraction_calls: self.counters.extraction.load(Ordering::SeqCst),
            judge_calls: self.counters.judge.load(Ordering::SeqCst),
            wall_time: self.started.elapsed(),
        }
    }

    fn count(&self, role: RoleTag) {
        let counter = match role {
            RoleTag::Generator => &self.counters.evaluation,
            RoleTag::Extractor => &self.counters.extraction,
            RoleTag::Judge => &self.counters.judge,
            _ => &self.counters.optimization,
        };
        counter.fetch_add(1, Ordering::SeqCst);
    }
}
