//! Streams five questions through retrieve, answer, extract, append. Each
//! query announces one office door code and asks for another one. Later
//! questions can only be answered from memories written by earlier ones.
//!
//! cargo run --example continual_stream

#[path = "common/toy.rs"]
mod toy;

use clue::continual::{run_stream, MemoryStore};
use clue::domain::{Conversation, Example, PromptCandidate, Role};
use clue::gateway::{RoleTag, ScriptedBackend};
use clue::reward::RewardSpec;
use clue::runner::Runner;
use regex::Regex;

const OFFICES: [(&str, &str); 5] = [
    ("Berlin", "4411"),
    ("Lisbon", "7302"),
    ("Osaka", "5190"),
    ("Quito", "2268"),
    ("Tunis", "8035"),
];

fn stream() -> Vec<Example> {
    (0..OFFICES.len())
        .map(|i| {
            let (city, code) = OFFICES[i];
            let (asked, gold) = OFFICES[i.saturating_sub(1)];
            Example::new(
                format!("door-{i}"),
                "doors",
                None,
                Conversation::from_pairs([(Role::User, "(the continual setting uses the target conversation)")]).unwrap(),
                format!("FYI the {city} office door code is {code}. What is the {asked} office door code?"),
                RewardSpec::ExactMatch {
                    gold: gold.into(),
                    aliases: vec![],
                },
            )
            .unwrap()
        })
        .collect()
}

fn backend() -> ScriptedBackend {
    let fact = Regex::new(r"(\w+) office door code is (\d+)").unwrap();
    let asked = Regex::new(r"What is the (\w+) office door code").unwrap();
    let known = fact.clone();
    ScriptedBackend::new()
        .responder(RoleTag::Extractor, move |req| {
            let facts: Vec<String> = fact
                .captures_iter(&req.user_text)
                .map(|c| format!("The {} office door code is {}.", &c[1], &c[2]))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .enumerate()
                .map(|(i, f)| format!("{}. {f}", i + 1))
                .collect();
            Some(facts.join("\n").into())
        })
        .responder(RoleTag::Generator, move |req| {
            let text = &req.user_text;
            let city = asked.captures(text)?[1].to_string();
            // Only the memory block counts as knowledge.
            let memory = text.split("</memory>").next().unwrap_or("");
            let code = known
                .captures_iter(memory)
                .find(|c| c[1] == city)
                .map(|c| c[2].to_string())
                .unwrap_or_else(|| "unknown".into());
            Some(format!("Answer: {code}").into())
        })
}

fn main() {
    let runner = Runner::new(toy::gateway(backend()));
    let prompt = PromptCandidate::seed("doors", "Extract every door code as a numbered list.").unwrap();
    let mut store = MemoryStore::new();
    let report = run_stream(&runner, &prompt, &stream(), 2, &mut store).expect("stream runs");

    for step in &report.trace {
        let seen: Vec<String> = step
            .retrieved
            .iter()
            .map(|r| format!("#{} from {} ({:.2})", r.seq, r.origin_task_id, r.similarity))
            .collect();
        println!(
            "{}  reward {}  retrieved [{}]  store {}",
            step.task_id,
            step.reward,
            seen.join(", "),
            step.store_size
        );
    }
    println!("\nmean reward {:.2}, stream hash {}", report.mean_reward, &report.stream_order_hash[..16]);
    for e in store.entries() {
        println!("  #{} {} (from {})", e.seq, e.text, e.origin_task_id);
    }
}
