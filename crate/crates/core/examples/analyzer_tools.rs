//! The cluster analyzer's log-reading tools. A scripted analyzer lists its
//! cluster, reads one member log, then tries a task outside the cluster and is
//! refused.
//!
//! cargo run --example analyzer_tools

#[path = "common/toy.rs"]
mod toy;

use std::collections::BTreeSet;

use clue::domain::{Cluster, PromptCandidate};
use clue::evolve::{Clue, EvolutionConfig};
use clue::gateway::{RoleTag, TranscriptEntry};
use clue::runner::{RepetitionPolicy, Runner};

fn main() {
    let script = [
        r#"{"tool": "list_cluster_tasks", "arguments": {}}"#,
        r#"{"tool": "read_pair_log", "arguments": {"task_id": "arith-1"}}"#,
        r#"{"tool": "read_pair_log", "arguments": {"task_id": "locker-1"}}"#,
        "**Failure Analysis**\nThe constant was not stored.",
    ];
    let backend = toy::world().responder(RoleTag::ClusterAnalyzer, move |req| {
        Some(script[(req.turns.len() / 2).min(script.len() - 1)].into())
    });
    let work = std::env::temp_dir().join("clue-analyzer-tools");
    let _ = std::fs::remove_dir_all(&work);
    let runner = Runner::new(toy::gateway(backend));
    let clue = Clue::new(runner, EvolutionConfig::default(), &work).unwrap();
    let prompt = PromptCandidate::seed("seed", "Extract memories.").unwrap();

    // Populate the analysis store for round 1.
    let examples = toy::corpus();
    clue.runner()
        .evaluate_prompt(&prompt, &examples, RepetitionPolicy::Fixed(1), 1, Some(clue.analysis_store()))
        .unwrap();

    let cluster = Cluster {
        cluster_id: "cluster_01".into(),
        label: "Session definitions".into(),
        description: "Numeric definitions reused later.".into(),
        task_ids: BTreeSet::from(["arith-1".to_string(), "arith-2".to_string()]),
    };
    let analysis = clue.analyze_cluster(&cluster, 1, &prompt);
    for entry in &analysis.transcript {
        match entry {
            TranscriptEntry::Model { step, text, .. } => println!("model[{step}]: {}", text.lines().next().unwrap_or("")),
            TranscriptEntry::Tool { step, name, outcome } => {
                let shown = format!("{outcome:?}");
                println!("tool[{step}] {name}: {}", &shown[..shown.len().min(90)]);
            }
        }
    }
    println!("\nread: {:?}  denied: {:?}", analysis.successful_reads(), analysis.denied_reads());
    println!("status: {:?}\n{}", analysis.status, analysis.report_text);
}
