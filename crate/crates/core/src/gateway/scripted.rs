//! Deterministic stand-in for every model role.
//!
//! Lookup order for a request: exact fingerprint table, then substring rules
//! (first match wins), then a per-role responder function, then the per-role
//! ordered fallback queue, then the per-role default reply. Everything except
//! the fallback queue depends only on request content, so it is insensitive to
//! concurrency. The fallback queue is consumed in arrival order and is only
//! replayable when requests for that role are issued sequentially.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{fingerprint, BackendError, ChatBackend, ChatRequest, ChatResponse, FinishReason, RoleTag, TokenUsage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedReply {
    Text(String),
    Transient(String),
    Permanent(String),
    Empty,
}

impl From<&str> for ScriptedReply {
    fn from(s: &str) -> Self {
        ScriptedReply::Text(s.to_string())
    }
}

impl From<String> for ScriptedReply {
    fn from(s: String) -> Self {
        ScriptedReply::Text(s)
    }
}

type Responder = Arc<dyn Fn(&ChatRequest) -> Option<ScriptedReply> + Send + Sync>;

#[derive(Default)]
pub struct ScriptedBackend {
    table: HashMap<(RoleTag, String), ScriptedReply>,
    contains: Vec<(RoleTag, String, ScriptedReply)>,
    responders: HashMap<RoleTag, Responder>,
    fallback: Mutex<HashMap<RoleTag, VecDeque<ScriptedReply>>>,
    defaults: HashMap<RoleTag, ScriptedReply>,
    journal: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        <Self as Default>::default()
    }

    pub fn on(self, role: RoleTag, system_text: &str, user_text: &str, reply: impl Into<String>) -> Self {
        self.on_reply(role, system_text, user_text, ScriptedReply::Text(reply.into()))
    }

    pub fn on_reply(mut self, role: RoleTag, system_text: &str, user_text: &str, reply: ScriptedReply) -> Self {
        self.table.insert((role, fingerprint(system_text, user_text, &[])), reply);
        self
    }

    /// Replies when the system or user text contains `needle`.
    pub fn when_contains(mut self, role: RoleTag, needle: impl Into<String>, reply: impl Into<ScriptedReply>) -> Self {
        self.contains.push((role, needle.into(), reply.into()));
        self
    }

    /// Installs a content-based responder; returning `None` falls through.
    pub fn responder<F>(mut self, role: RoleTag, f: F) -> Self
    where
        F: Fn(&ChatRequest) -> Option<ScriptedReply> + Send + Sync + 'static,
    {
        self.responders.insert(role, Arc::new(f));
        self
    }

    pub fn fallback(self, role: RoleTag, replies: Vec<ScriptedReply>) -> Self {
        self.fallback
            .lock()
            .expect("fallback poisoned")
            .entry(role)
            .or_default()
            .extend(replies);
        self
    }

    pub fn default(mut self, role: RoleTag, reply: ScriptedReply) -> Self {
        self.defaults.insert(role, reply);
        self
    }

    pub fn default_reply(self, role: RoleTag, text: impl Into<String>) -> Self {
        self.default(role, ScriptedReply::Text(text.into()))
    }

    /// True when any role has a non-empty ordered fallback queue.
    pub fn uses_fallback(&self) -> bool {
        self.fallback
            .lock()
            .expect("fallback poisoned")
            .values()
            .any(|q| !q.is_empty())
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.journal.lock().expect("journal poisoned").clone()
    }

    fn lookup(&self, req: &ChatRequest) -> Option<ScriptedReply> {
        let role = req.role_tag;
        if let Some(r) = self.table.get(&(role, req.fingerprint())) {
            return Some(r.clone());
        }
        if let Some((_, _, r)) = self
            .contains
            .iter()
            .find(|(r, needle, _)| *r == role && (req.user_text.contains(needle) || req.system_text.contains(needle)))
        {
            return Some(r.clone());
        }
        if let Some(f) = self.responders.get(&role) {
            if let Some(r) = f(req) {
                return Some(r);
            }
        }
        if let Some(r) = self
            .fallback
            .lock()
            .expect("fallback poisoned")
            .get_mut(&role)
            .and_then(VecDeque::pop_front)
        {
            return Some(r);
        }
        self.defaults.get(&role).cloned()
    }

    pub fn from_script(script: MockScript) -> Self {
        let mut b = ScriptedBackend::new();
        for e in script.exact {
            b = b.on_reply(e.role, &e.system, &e.user, e.reply.into());
        }
        for c in script.contains {
            b = b.when_contains(c.role, c.needle, ScriptedReply::from(c.reply));
        }
        for (role, replies) in script.fallback {
            b = b.fallback(role, replies.into_iter().map(Into::into).collect());
        }
        for (role, reply) in script.defaults {
            b = b.default(role, reply.into());
        }
        b
    }
}

impl ChatBackend for ScriptedBackend {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.journal.lock().expect("journal poisoned").push(request.clone());
        let words = |s: &str| s.split_whitespace().count() as u64;
        match self.lookup(request) {
            Some(ScriptedReply::Text(text)) => Ok(ChatResponse {
                token_usage: TokenUsage {
                    prompt: words(&request.system_text) + words(&request.user_text),
                    completion: words(&text),
                },
                text,
                finish_reason: FinishReason::Stop,
            }),
            Some(ScriptedReply::Empty) => Ok(ChatResponse::stop("")),
            Some(ScriptedReply::Transient(m)) => Err(BackendError::Transient(m)),
            Some(ScriptedReply::Permanent(m)) => Err(BackendError::Permanent(m)),
            None => Err(BackendError::Permanent(format!(
                "no scripted reply for {} request {}",
                request.role_tag,
                &request.fingerprint()[..12]
            ))),
        }
    }
}

/// On-disk form of a scripted backend, selected with `--mock <file>`.
///
/// ```json
/// {
///   "exact":    [{"role": "generator", "system": "", "user": "hi", "reply": "ok"}],
///   "contains": [{"role": "generator", "needle": "Tokyo", "reply": "Answer: A"}],
///   "fallback": {"proposer": ["[...]", {"error": "transient"}]},
///   "defaults": {"extractor": "1. a fact"}
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub exact: Vec<ExactEntry>,
    #[serde(default)]
    pub contains: Vec<ContainsEntry>,
    #[serde(default)]
    pub fallback: HashMap<RoleTag, Vec<ReplySpec>>,
    #[serde(default)]
    pub defaults: HashMap<RoleTag, ReplySpec>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEntry {
    pub role: RoleTag,
    #[serde(default)]
    pub system: String,
    pub user: String,
    pub reply: ReplySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainsEntry {
    pub role: RoleTag,
    pub needle: String,
    pub reply: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplySpec {
    Text(String),
    Error {
        error: ErrorKind,
        #[serde(default)]
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Transient,
    Permanent,
    Empty,
}

impl From<ReplySpec> for ScriptedReply {
    fn from(r: ReplySpec) -> Self {
        match r {
            ReplySpec::Text(t) => ScriptedReply::Text(t),
            ReplySpec::Error { error: ErrorKind::Transient, message } => ScriptedReply::Transient(message),
            ReplySpec::Error { error: ErrorKind::Permanent, message } => ScriptedReply::Permanent(message),
            ReplySpec::Error { error: ErrorKind::Empty, .. } => ScriptedReply::Empty,
        }
    }
}
