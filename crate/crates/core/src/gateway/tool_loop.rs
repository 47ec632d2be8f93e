//! Text-encoded tool calling.
//!
//! A model turn is a tool call when it contains a JSON object with a string
//! `"tool"` field, e.g. `{"tool": "read_pair_log", "arguments": {"task_id": "0003"}}`.
//! Markdown fences and surrounding prose are tolerated. Any other turn is the
//! final answer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{ChatRequest, Gateway, GatewayError};
use crate::domain::{Message, Role};
use crate::json_extract::first_object;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolLoopStep {
    ToolCall { name: String, arguments: Map<String, Value> },
    FinalText(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "content")]
pub enum ToolOutcome {
    Ok(String),
    AccessDenied(String),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "entry")]
pub enum TranscriptEntry {
    Model { step: usize, text: String, parsed: ToolLoopStep },
    Tool { step: usize, name: String, outcome: ToolOutcome },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("AccessDenied: {0}")]
    AccessDenied(String),
    #[error("tool failed: {0}")]
    Failed(String),
}

pub type ToolHandler = Box<dyn Fn(&Map<String, Value>) -> Result<String, ToolError> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct ToolLoopOutput {
    pub final_text: String,
    pub transcript: Vec<TranscriptEntry>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolLoopError {
    #[error("model called unknown tool {name:?}")]
    UnknownTool { name: String, transcript: Vec<TranscriptEntry> },
    /// The model did not finish within the step budget. The partial transcript
    /// is returned and the caller must treat the result as forced-final.
    #[error("tool loop did not finish within {max_steps} steps")]
    StepBudgetExhausted {
        max_steps: usize,
        transcript: Vec<TranscriptEntry>,
    },
    #[error("max_steps must be at least 1")]
    InvalidBudget,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Classifies one model turn.
pub fn parse_tool_call(text: &str) -> ToolLoopStep {
    if let Some(obj) = first_object(text) {
        if let Some(name) = obj.get("tool").and_then(Value::as_str) {
            let arguments = match obj.get("arguments") {
                Some(Value::Object(m)) => m.clone(),
                _ => Map::new(),
            };
            return ToolLoopStep::ToolCall {
                name: name.to_string(),
                arguments,
            };
        }
    }
    ToolLoopStep::FinalText(text.trim().to_string())
}

fn tool_turn(name: &str, outcome: &ToolOutcome) -> Message {
    let body = match outcome {
        ToolOutcome::Ok(s) => format!("[tool result: {name}]\n{s}"),
        ToolOutcome::AccessDenied(s) => format!("[tool error: {name}] AccessDenied: {s}"),
        ToolOutcome::Failed(s) => format!("[tool error: {name}] {s}"),
    };
    Message::new(Role::Tool, body).expect("tool turn text is never blank")
}

impl Gateway {
    /// Runs a model/tool conversation until the model answers without a tool
    /// call or `max_steps` model turns have been used.
    pub fn run_tool_loop(
        &self,
        request: &ChatRequest,
        tools: &BTreeMap<String, ToolHandler>,
        max_steps: usize,
    ) -> Result<ToolLoopOutput, ToolLoopError> {
        if max_steps == 0 {
            return Err(ToolLoopError::InvalidBudget);
        }
        let mut req = request.clone();
        let mut transcript = Vec::new();
        for step in 1..=max_steps {
            let resp = self.complete(&req)?;
            let parsed = parse_tool_call(&resp.text);
            transcript.push(TranscriptEntry::Model {
                step,
                text: resp.text.clone(),
                parsed: parsed.clone(),
            });
            let (name, arguments) = match parsed {
                ToolLoopStep::FinalText(final_text) => {
                    return Ok(ToolLoopOutput {
                        final_text,
                        transcript,
                        steps: step,
                    })
                }
                ToolLoopStep::ToolCall { name, arguments } => (name, arguments),
            };
            let Some(handler) = tools.get(&name) else {
                return Err(ToolLoopError::UnknownTool { name, transcript });
            };
            let outcome = match handler(&arguments) {
                Ok(s) => ToolOutcome::Ok(s),
                Err(ToolError::AccessDenied(s)) => ToolOutcome::AccessDenied(s),
                Err(ToolError::Failed(s)) => ToolOutcome::Failed(s),
            };
            if let Ok(m) = Message::assistant(resp.text.clone()) {
                req.turns.push(m);
            }
            req.turns.push(tool_turn(&name, &outcome));
            transcript.push(TranscriptEntry::Tool { step, name, outcome });
        }
        Err(ToolLoopError::StepBudgetExhausted { max_steps, transcript })
    }
}
