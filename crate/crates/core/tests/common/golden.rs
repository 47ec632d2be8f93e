//! Fixed input tuples rendered through each optimizer template, paired with
//! the hand-transcribed expected text under `tests/fixtures`.

use std::collections::BTreeSet;
use std::path::Path;

use clue::assets;
use clue::domain::{Cluster, ClusterPool, Conversation, MemorySet, PairLog, PromptCandidate, Reward, Role};
use clue::evolve::{
    render_analyzer_input, render_cluster_manager_input, render_proposer_input, render_summarizer_input,
    AnalysisStatus, ClusterAnalysis,
};

fn fixture(rel: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn pool_cluster() -> Cluster {
    Cluster {
        cluster_id: "cluster_01".into(),
        label: "Implicit user preferences in casual multi-turn conversation".into(),
        description: "Preferences are stated indirectly and must be inferred.".into(),
        task_ids: BTreeSet::from(["0000".to_string(), "0003".to_string()]),
    }
}

fn summaries() -> Vec<(String, String)> {
    vec![
        (
            "0000".into(),
            "The memory must capture an implicit seating preference stated once in a short dialogue.".into(),
        ),
        (
            "0003".into(),
            "The extraction must keep a multi-step procedure intact across a long trajectory.".into(),
        ),
    ]
}

fn analysis(id: &str, label: &str, report: &str) -> ClusterAnalysis {
    ClusterAnalysis {
        cluster_id: id.into(),
        label: label.into(),
        report_text: report.into(),
        status: AnalysisStatus::Completed,
        transcript: vec![],
    }
}

/// `(name, rendered, expected)` for every optimizer template and static prompt.
pub fn cases() -> Vec<(String, String, String)> {
    let log = PairLog {
        task_id: "0000".into(),
        dataset_id: "travel".into(),
        prompt_id: "seed".into(),
        round: 1,
        repetition: 0,
        source_conversation: Conversation::from_pairs([
            (Role::User, "I prefer window seats on long flights."),
            (Role::Assistant, "Noted, I will remember that you prefer window seats."),
        ])
        .unwrap(),
        extracted_memory: MemorySet::from_raw("1. User prefers window seats on long flights."),
        target_conversation: Conversation::from_pairs([
            (Role::User, "Book me a flight to Tokyo."),
            (Role::Assistant, "I booked a window seat on your flight to Tokyo."),
        ])
        .unwrap(),
        target_reward: Reward::ONE,
        summary: None,
        diagnostic: None,
    };
    let pool = ClusterPool {
        clusters: vec![pool_cluster()],
        round_updated: 1,
    };
    let parent = PromptCandidate::seed("seed", "Extract useful memories.").unwrap();
    let analyses = [
        analysis("cluster_01", "Preferences", "**Success Analysis**\nGood."),
        analysis("cluster_02", "Procedures", "**Failure Analysis**\nSteps were dropped."),
    ];
    let mut out = vec![
        (
            "summarizer".to_string(),
            render_summarizer_input(&log, 4096),
            fixture("golden/summarizer.txt"),
        ),
        (
            "cluster_manager_empty_pool".to_string(),
            render_cluster_manager_input(&summaries(), &ClusterPool::default()),
            fixture("golden/cluster_manager_empty_pool.txt"),
        ),
        (
            "cluster_manager_with_pool".to_string(),
            render_cluster_manager_input(&summaries(), &pool),
            fixture("golden/cluster_manager_with_pool.txt"),
        ),
        (
            "cluster_analyzer".to_string(),
            render_analyzer_input(2, &pool_cluster(), "runs/logs/analysis", "Extract useful memories."),
            fixture("golden/cluster_analyzer.txt"),
        ),
        (
            "proposer".to_string(),
            render_proposer_input(&analyses, &parent),
            fixture("golden/proposer.txt"),
        ),
    ];
    for (id, text) in assets::STATIC_PROMPTS {
        out.push((format!("static:{id}"), text.to_string(), fixture(&format!("prompts/{id}.txt"))));
    }
    for (id, text) in [
        ("summarizer", assets::SUMMARIZER),
        ("cluster_manager", assets::CLUSTER_MANAGER),
        ("cluster_analyzer", assets::CLUSTER_ANALYZER),
        ("proposer", assets::PROPOSER),
    ] {
        out.push((format!("template:{id}"), text.to_string(), fixture(&format!("prompts/{id}.txt"))));
    }
    out
}

/// First differing line, for readable failures.
pub fn first_difference(a: &str, b: &str) -> Option<(usize, String, String)> {
    let (mut la, mut lb) = (a.split('\n'), b.split('\n'));
    for i in 1.. {
        match (la.next(), lb.next()) {
            (None, None) => return None,
            (x, y) if x != y => return Some((i, x.unwrap_or("<eof>").into(), y.unwrap_or("<eof>").into())),
            _ => {}
        }
    }
    None
}
