//! Prompt assets shipped with the crate and the `{name}` placeholder renderer.

use std::collections::HashMap;

use thiserror::Error;

pub const SIMPLE: &str = include_str!("../assets/prompts/simple.txt");
pub const MEM0: &str = include_str!("../assets/prompts/mem0.txt");
pub const REASONING_BANK: &str = include_str!("../assets/prompts/reasoningbank.txt");
pub const OPEN_MEMORY: &str = include_str!("../assets/prompts/openmemory.txt");
pub const SURVEY: &str = include_str!("../assets/prompts/survey.txt");

pub const SUMMARIZER: &str = include_str!("../assets/prompts/summarizer.txt");
pub const CLUSTER_MANAGER: &str = include_str!("../assets/prompts/cluster_manager.txt");
pub const CLUSTER_ANALYZER: &str = include_str!("../assets/prompts/cluster_analyzer.txt");
pub const PROPOSER: &str = include_str!("../assets/prompts/proposer.txt");

/// Generation template: memory block placed above the target query. Version 1.
pub const GENERATION: &str = include_str!("../assets/prompts/generation.txt");
/// Generic yes/no judge rubric. Version 1.
pub const JUDGE: &str = include_str!("../assets/prompts/judge.txt");
/// Tool-calling protocol given to the cluster analyzer as its system text.
pub const TOOL_PROTOCOL: &str = include_str!("../assets/prompts/tool_protocol.txt");

/// Sentinel rendered in place of an empty memory block.
pub const NO_MEMORY_SENTINEL: &str = "(no memory)";

/// Identifier accepted on the command line for the memory-free baseline.
pub const NO_MEMORY_PROMPT_ID: &str = "no_memory";

/// The five static extraction prompts, by asset id.
pub const STATIC_PROMPTS: [(&str, &str); 5] = [
    ("simple", SIMPLE),
    ("mem0", MEM0),
    ("reasoningbank", REASONING_BANK),
    ("openmemory", OPEN_MEMORY),
    ("survey", SURVEY),
];

pub fn static_prompt(id: &str) -> Option<&'static str> {
    STATIC_PROMPTS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(id))
        .map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template placeholder {{{0}}} has no value")]
    MissingValue(String),
}

/// Substitutes `{name}` placeholders in a single pass.
///
/// Only placeholders whose names appear in `values` are replaced; any other
/// brace text (JSON examples in the templates) is copied verbatim. Inserted
/// values are never re-scanned.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let map: HashMap<&str, &str> = values.iter().copied().collect();
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'))
            .unwrap_or(after.len());
        let name = &after[..name_len];
        if name_len > 0 && after[name_len..].starts_with('}') {
            if let Some(value) = map.get(name) {
                out.push_str(value);
                rest = &after[name_len + 1..];
                continue;
            }
        }
        out.push('{');
        rest = after;
    }
    out.push_str(rest);
    out
}

/// Like [`render`] but fails when a placeholder listed in `required` is absent
/// from `values`.
pub fn render_strict(template: &str, values: &[(&str, &str)], required: &[&str]) -> Result<String, TemplateError> {
    for name in required {
        if !values.iter().any(|(k, _)| k == name) {
            return Err(TemplateError::MissingValue((*name).to_string()));
        }
    }
    Ok(render(template, values))
}
