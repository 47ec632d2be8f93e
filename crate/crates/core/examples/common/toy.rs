//! A small deterministic world for the examples: the 12-example toy corpus and
//! a scripted backend that behaves like a forgetful extractor.
//!
//! The extractor always keeps locker codes but only keeps numeric definitions
//! and warehouse instructions when its system prompt asks for facts to be
//! copied "verbatim". The proposer suggests exactly such a prompt, so evolution
//! has something to find. Without memory the generator guesses W1 for
//! warehouse questions.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clue::domain::Example;
use clue::gateway::{Gateway, HashEmbedder, RetryPolicy, RoleTag, ScriptedBackend};
use clue::harness::load_corpus;
use regex::Regex;

pub const EVOLVED_PROMPT: &str = "Copy every concrete fact, code, number and standing instruction from the conversation verbatim.\nOutput only the memories as a numbered list.";

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data")
}

pub fn corpus() -> Vec<Example> {
    load_corpus(&data_dir().join("toy_corpus.jsonl"))
        .expect("toy corpus loads")
        .into_examples()
}

pub fn world() -> ScriptedBackend {
    let locker = Regex::new(r"locker code is (K\d+)").unwrap();
    let constant = Regex::new(r"constant q equals (\d+)").unwrap();
    let warehouse = Regex::new(r"warehouse (W\d+)").unwrap();
    let tagged = Regex::new(r"(?m)^\[([^\]]+)\]").unwrap();
    let (l2, c2, w2) = (locker.clone(), constant.clone(), warehouse.clone());
    ScriptedBackend::new()
        .responder(RoleTag::Extractor, move |req| {
            let text = &req.user_text;
            let thorough = req.system_text.contains("verbatim");
            let mut items = Vec::new();
            if let Some(c) = l2.captures(text) {
                items.push(format!("The user's gym locker code is {}.", &c[1]));
            }
            if let (true, Some(c)) = (thorough, c2.captures(text)) {
                items.push(format!("In this session the constant q equals {}.", &c[1]));
            }
            if let (true, Some(c)) = (thorough, w2.captures(text)) {
                items.push(format!("Always ship orders from warehouse {}.", &c[1]));
            }
            if items.is_empty() {
                items.push("The user had a short exchange with the assistant.".into());
            }
            let list: Vec<String> = items.iter().enumerate().map(|(i, m)| format!("{}. {m}", i + 1)).collect();
            Some(list.join("\n").into())
        })
        .responder(RoleTag::Generator, move |req| {
            let text = &req.user_text;
            let reply = if let Some(c) = locker.captures(text) {
                format!("Your code is {}.\nAnswer: {}", &c[1], &c[1])
            } else if let Some(c) = constant.captures(text) {
                let q: i64 = c[1].parse().ok()?;
                format!("q = {q}, so q times 2 = {}.\nAnswer: {}", 2 * q, 2 * q)
            } else if let Some(c) = warehouse.captures(text) {
                format!("Ship it from {}.\nAnswer: {}", &c[1], &c[1])
            } else if text.contains("ship from") {
                "Probably the main warehouse.\nAnswer: W1".into()
            } else {
                "I do not know.\nAnswer: unknown".into()
            };
            Some(reply.into())
        })
        .responder(RoleTag::Summarizer, |req| {
            let t = &req.user_text;
            Some(
                if t.contains("locker") {
                    "The memory must keep a short personal credential stated once."
                } else if t.contains("constant q") {
                    "The memory must keep a numeric definition needed for later arithmetic."
                } else {
                    "The memory must keep a standing instruction buried in an agent trajectory."
                }
                .into(),
            )
        })
        .responder(RoleTag::ClusterManager, move |req| {
            let mut groups: std::collections::BTreeMap<String, Vec<String>> = Default::default();
            for c in tagged.captures_iter(&req.user_text) {
                let id = c[1].to_string();
                let family = id.split('-').next().unwrap_or("misc").to_string();
                groups.entry(family).or_default().push(id);
            }
            let clusters: Vec<_> = groups
                .into_iter()
                .map(|(family, ids)| {
                    serde_json::json!({
                        "cluster_id": "new",
                        "label": format!("{family} scenarios"),
                        "description": format!("Extraction cases from the {family} family."),
                        "example_task_ids": ids,
                    })
                })
                .collect();
            Some(serde_json::json!({ "clusters": clusters }).to_string().into())
        })
        .responder(RoleTag::ClusterAnalyzer, |req| {
            // Model turn and tool result alternate in `turns`.
            let reply = match req.turns.len() {
                0 => r#"{"tool": "list_cluster_tasks", "arguments": {}}"#.to_string(),
                2 => {
                    let first = req.turns[1].content().lines().next().unwrap_or("");
                    let id = first.split('\t').next().unwrap_or("");
                    serde_json::json!({"tool": "read_pair_log", "arguments": {"task_id": id}}).to_string()
                }
                _ => "**Failure Analysis**\nConcrete values outside personal facts were paraphrased away.\n\n\
                      **Recommendations**\nCopy numbers and standing instructions verbatim."
                    .to_string(),
            };
            Some(reply.into())
        })
        .responder(RoleTag::Proposer, |_| {
            Some(
                serde_json::json!([{
                    "candidate_id": "cand_01",
                    "system_prompt": EVOLVED_PROMPT,
                    "rationale": "Numeric definitions and warehouse rules were lost."
                }])
                .to_string()
                .into(),
            )
        })
}

pub fn gateway(backend: ScriptedBackend) -> Arc<Gateway> {
    Arc::new(
        Gateway::builder()
            .route_all(Arc::new(backend))
            .embedder(Arc::new(HashEmbedder::new(256)))
            .retry(RetryPolicy::no_delay(0))
            .build(),
    )
}
