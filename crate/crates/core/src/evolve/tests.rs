use std::sync::atomic::{AtomicUsize, Ordering};

use regex::Regex;

use super::*;
use crate::domain::{Conversation, MemorySet, Reward, Role};
use crate::gateway::{Gateway, RetryPolicy, ScriptedBackend, ScriptedReply};
use crate::reward::RewardSpec;

fn example(i: usize) -> Example {
    Example::new(
        format!("t{i:02}"),
        if i % 2 == 0 { "even" } else { "odd" },
        None,
        Conversation::from_pairs([(Role::User, format!("fact {i}").as_str())]).unwrap(),
        format!("question {i}"),
        RewardSpec::ExactMatch {
            gold: format!("a{i}"),
            aliases: vec![],
        },
    )
    .unwrap()
}

fn corpus(n: usize) -> Vec<Example> {
    (0..n).map(example).collect()
}

/// Prompts containing "better" make the extractor keep the answer.
fn world() -> ScriptedBackend {
    let fact = Regex::new(r"fact (\d+)").unwrap();
    let known = Regex::new(r"answer is (a\d+)").unwrap();
    let tagged = Regex::new(r"(?m)^\[([^\]]+)\]").unwrap();
    ScriptedBackend::new()
        .responder(RoleTag::Extractor, move |req| {
            let n = &fact.captures(&req.user_text)?[1];
            Some(if req.system_text.contains("better") {
                format!("1. answer is a{n}").into()
            } else {
                "1. nothing useful".into()
            })
        })
        .responder(RoleTag::Generator, move |req| {
            Some(match known.captures(&req.user_text) {
                Some(c) => format!("Answer: {}", &c[1]).into(),
                None => "Answer: unknown".into(),
            })
        })
        .default_reply(RoleTag::Summarizer, "\n  Scenario summary.  \n")
        .responder(RoleTag::ClusterManager, move |req| {
            let ids: Vec<String> = tagged.captures_iter(&req.user_text).map(|c| c[1].to_string()).collect();
            let (a, b) = ids.split_at(ids.len() / 2);
            Some(
                serde_json::json!({"clusters": [
                    {"cluster_id": "cluster_01", "label": "Facts", "description": "facts", "example_task_ids": a},
                    {"cluster_id": "cluster_02", "label": "More facts", "description": "more", "example_task_ids": b},
                ]})
                .to_string()
                .into(),
            )
        })
        .default_reply(RoleTag::ClusterAnalyzer, "**Success Analysis**\nfine")
        .default_reply(
            RoleTag::Proposer,
            r#"[{"candidate_id": "cand_01", "system_prompt": "a better prompt", "rationale": "keep answers"}]"#,
        )
}

fn clue_with(backend: ScriptedBackend, config: EvolutionConfig, dir: &std::path::Path) -> Clue {
    let gw = Gateway::builder()
        .route_all(Arc::new(backend))
        .retry(RetryPolicy::no_delay(0))
        .build();
    Clue::new(Runner::new(Arc::new(gw)).with_max_in_flight(4), config, dir).unwrap()
}

fn toy_config() -> EvolutionConfig {
    EvolutionConfig {
        num_rounds: 2,
        batch_x: 4,
        extra_sample_y: 2,
        num_candidates: 2,
        seed: 11,
        ..Default::default()
    }
}

fn seed() -> PromptCandidate {
    PromptCandidate::seed("seed", "Extract memories.").unwrap()
}

#[test]
fn default_config() {
    let c = EvolutionConfig::default();
    assert_eq!(
        (c.num_rounds, c.batch_x, c.extra_sample_y, c.num_candidates),
        (5, 35, 10, 3)
    );
    assert_eq!((c.preview_chars, c.max_clusters, c.min_cluster_size), (4096, 7, 2));
    assert!(c.validate().is_ok());
    let bad = EvolutionConfig {
        batch_x: 1,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn select_winner_ties() {
    assert_eq!(select_winner(&[0.5, 0.9, 0.9]), 1);
    assert_eq!(select_winner(&[0.5, 0.5]), 0);
    assert_eq!(select_winner(&[0.7, 0.2, 0.6]), 0);
    assert_eq!(select_winner(&[0.7]), 0);
}

fn pair_log(source: &str) -> PairLog {
    PairLog {
        task_id: "0000".into(),
        dataset_id: "d".into(),
        prompt_id: "p".into(),
        round: 1,
        repetition: 0,
        source_conversation: Conversation::from_pairs([(Role::User, source)]).unwrap(),
        extracted_memory: MemorySet::from_raw("1. m"),
        target_conversation: Conversation::from_pairs([(Role::User, "q"), (Role::Assistant, "a")]).unwrap(),
        target_reward: Reward::ONE,
        summary: None,
        diagnostic: None,
    }
}

#[test]
fn summarizer_preview_is_truncated() {
    let log = pair_log(&"x".repeat(10_000));
    let text = render_summarizer_input(&log, 4096);
    assert!(text.contains("source_conversation (first 4096 chars):\n"));
    let start = text.find("<conversation>").unwrap();
    let end = text[start..].find("\n\nextracted_memory:").unwrap();
    assert_eq!(text[start..start + end].chars().count(), 4096);
}

#[test]
fn summary_is_trimmed_and_failure_uses_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let clue = clue_with(world(), toy_config(), dir.path());
    assert_eq!(clue.summarize_example(&pair_log("hi")), "Scenario summary.");
    let broken = clue_with(
        ScriptedBackend::new().default(RoleTag::Summarizer, ScriptedReply::Permanent("x".into())),
        toy_config(),
        dir.path(),
    );
    assert_eq!(broken.summarize_example(&pair_log("hi")), SUMMARY_UNAVAILABLE);
}

fn summaries(n: usize) -> Vec<(String, String)> {
    (0..n).map(|i| (format!("{i:04}"), format!("summary {i}"))).collect()
}

fn manager(replies: Vec<&str>) -> ScriptedBackend {
    ScriptedBackend::new().fallback(RoleTag::ClusterManager, replies.into_iter().map(Into::into).collect())
}

#[test]
fn cluster_valid_partition() {
    let dir = tempfile::tempdir().unwrap();
    let reply = r#"{"clusters": [{"cluster_id": "cluster_01", "label": "A", "description": "a", "example_task_ids": ["0000", "0001"]}, {"cluster_id": "cluster_02", "label": "B", "description": "b", "example_task_ids": ["0002", "0003"]}]}"#;
    let clue = clue_with(manager(vec![reply]), toy_config(), dir.path());
    let mut next = 1;
    let out = clue.cluster_batch(&summaries(4), &ClusterPool::default(), &mut next, 1);
    assert_eq!(out.pool.len(), 2);
    assert_eq!((out.attempts, out.repaired, out.fallback), (1, false, false));
    assert_eq!(next, 3);
}

#[test]
fn cluster_fenced_reply() {
    let dir = tempfile::tempdir().unwrap();
    let reply = "```json\n{\"clusters\": [{\"label\": \"A\", \"description\": \"a\", \"example_task_ids\": [\"0000\", \"0001\"]}]}\n```";
    let clue = clue_with(manager(vec![reply]), toy_config(), dir.path());
    let out = clue.cluster_batch(&summaries(2), &ClusterPool::default(), &mut 1, 1);
    assert_eq!(out.attempts, 1);
    assert_eq!(out.pool.clusters[0].cluster_id, "cluster_01");
}

#[test]
fn cluster_singleton_is_merged_after_retry() {
    let dir = tempfile::tempdir().unwrap();
    let reply = r#"{"clusters": [{"label": "A", "description": "a", "example_task_ids": ["0000", "0001"]}, {"label": "B", "description": "b", "example_task_ids": ["0002"]}]}"#;
    let clue = clue_with(manager(vec![reply, reply]), toy_config(), dir.path());
    let out = clue.cluster_batch(&summaries(3), &ClusterPool::default(), &mut 1, 1);
    assert_eq!(out.pool.len(), 1);
    assert!(out.repaired);
    assert_eq!(out.attempts, 2);
    assert!(out.pool.check_partition(&["0000".into(), "0001".into(), "0002".into()], 7, 2).is_ok());
}

#[test]
fn cluster_retry_notice_lists_violations() {
    let backend = Arc::new(manager(vec![
        r#"{"clusters": [{"label": "A", "example_task_ids": ["0000"]}]}"#,
        r#"{"clusters": [{"label": "A", "example_task_ids": ["0000", "0001"]}]}"#,
    ]));
    let gw = Gateway::builder().route_all(backend.clone()).build();
    let dir = tempfile::tempdir().unwrap();
    let clue = Clue::new(Runner::new(Arc::new(gw)), toy_config(), dir.path()).unwrap();
    let out = clue.cluster_batch(&summaries(2), &ClusterPool::default(), &mut 1, 1);
    assert!(!out.repaired && !out.fallback);
    let second = &backend.requests()[1].user_text;
    assert!(second.contains("Your previous reply was rejected:"));
    assert!(second.contains("task id 0001 is not assigned to any cluster"));
}

#[test]
fn cluster_fallback_only_when_both_unparsable() {
    let dir = tempfile::tempdir().unwrap();
    let clue = clue_with(manager(vec!["nope", "still nope"]), toy_config(), dir.path());
    let out = clue.cluster_batch(&summaries(5), &ClusterPool::default(), &mut 1, 1);
    assert!(out.fallback);
    assert_eq!(out.pool.len(), 1);
    assert_eq!(out.pool.clusters[0].task_ids.len(), 5);

    let one_parsed = r#"{"clusters": [{"label": "A", "example_task_ids": ["0000"]}]}"#;
    let clue = clue_with(manager(vec![one_parsed, "garbage"]), toy_config(), dir.path());
    let out = clue.cluster_batch(&summaries(5), &ClusterPool::default(), &mut 1, 1);
    assert!(!out.fallback && out.repaired);
    assert_eq!(out.pool.clusters[0].task_ids.len(), 5);
}

fn stored_cluster(clue: &Clue) -> Cluster {
    for (i, t) in ["0000", "0003", "0009"].iter().enumerate() {
        let mut l = pair_log("src");
        l.task_id = t.to_string();
        l.prompt_id = "seed".into();
        l.target_reward = if i == 0 { Reward::ONE } else { Reward::ZERO };
        clue.analysis_store().put(&l).unwrap();
    }
    Cluster {
        cluster_id: "cluster_01".into(),
        label: "Prefs".into(),
        description: "d".into(),
        task_ids: ["0000", "0003"].iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn analyzer_reads_in_cluster_and_is_denied_outside() {
    let dir = tempfile::tempdir().unwrap();
    let backend = ScriptedBackend::new().fallback(
        RoleTag::ClusterAnalyzer,
        vec![
            r#"{"tool": "read_pair_log", "arguments": {"task_id": "0009"}}"#.into(),
            r#"{"tool": "read_pair_log", "arguments": {"task_id": "0003"}}"#.into(),
            r#"{"tool": "list_cluster_tasks", "arguments": {}}"#.into(),
            "**Success Analysis**\nok".into(),
        ],
    );
    let clue = clue_with(backend, toy_config(), dir.path());
    let cluster = stored_cluster(&clue);
    let a = clue.analyze_cluster(&cluster, 1, &seed());
    assert_eq!(a.status, AnalysisStatus::Completed);
    assert_eq!(a.successful_reads(), ["0003"]);
    assert_eq!(a.denied_reads(), ["0009"]);
    let listed = a
        .transcript
        .iter()
        .find_map(|e| match e {
            TranscriptEntry::Tool {
                name,
                outcome: ToolOutcome::Ok(s),
                ..
            } if name == "list_cluster_tasks" => Some(s.clone()),
            _ => None,
        })
        .unwrap();
    assert_eq!(listed, "0000\ttarget_reward=1\n0003\ttarget_reward=0");
}

#[test]
fn analyzer_budget_forces_final() {
    let dir = tempfile::tempdir().unwrap();
    let backend = ScriptedBackend::new().default_reply(RoleTag::ClusterAnalyzer, r#"{"tool": "list_cluster_tasks"}"#);
    let config = EvolutionConfig {
        max_analyzer_steps: 3,
        ..toy_config()
    };
    let clue = clue_with(backend, config, dir.path());
    let cluster = stored_cluster(&clue);
    let a = clue.analyze_cluster(&cluster, 1, &seed());
    assert_eq!(a.status, AnalysisStatus::ForcedFinal);
    assert!(a.report_text.starts_with(FORCED_FINAL_MARKER));
    assert_eq!(a.transcript.len(), 6);
}

fn analysis() -> ClusterAnalysis {
    ClusterAnalysis {
        cluster_id: "cluster_01".into(),
        label: "L".into(),
        report_text: "R".into(),
        status: AnalysisStatus::Completed,
        transcript: vec![],
    }
}

#[test]
fn proposals() {
    let dir = tempfile::tempdir().unwrap();
    let ok = r#"[{"candidate_id":"cand_01","system_prompt":"P","rationale":"r"}]"#;
    let two = r#"[{"system_prompt":"first"},{"system_prompt":"second"}]"#;
    let empty = r#"[{"candidate_id":"cand_01","system_prompt":"  ","rationale":"r"}]"#;
    let backend = ScriptedBackend::new().fallback(
        RoleTag::Proposer,
        vec![ok.into(), two.into(), empty.into(), empty.into(), "junk".into(), ok.into()],
    );
    let clue = clue_with(backend, toy_config(), dir.path());
    let c = clue.propose_prompt(&[analysis()], &seed(), 1, 1).unwrap();
    assert_eq!((c.text(), c.parent_id(), c.rationale()), ("P", Some("seed"), Some("r")));
    assert_eq!(c.prompt_id(), "r1-c1");
    assert_eq!(clue.propose_prompt(&[analysis()], &seed(), 1, 2).unwrap().text(), "first");
    assert!(matches!(
        clue.propose_prompt(&[analysis()], &seed(), 1, 3),
        Err(EvolveError::ProposalFailed(ref r)) if r.contains("empty")
    ));
    assert_eq!(clue.propose_prompt(&[analysis()], &seed(), 1, 4).unwrap().text(), "P");
}

#[test]
fn better_candidate_wins_round() {
    let dir = tempfile::tempdir().unwrap();
    let clue = clue_with(world(), toy_config(), dir.path());
    let train = corpus(12);
    let mut state = clue.start(&seed(), &train).unwrap();
    let rec = clue.run_round(&mut state, &train).unwrap();
    assert_eq!(rec.eval_means[0].mean_reward, 0.0);
    assert_eq!(rec.eval_means[1].mean_reward, 1.0);
    assert_eq!(rec.winner_id, "r1-c1");
    assert_eq!(state.incumbent.text(), "a better prompt");
    assert_eq!(rec.eval_batch.len(), 6);
    let fresh: HashSet<&String> = rec.eval_batch[..4].iter().collect();
    assert!(rec.analysis_batch.iter().all(|t| !fresh.contains(t)));
    assert!(rec.eval_batch[4..].iter().all(|t| rec.analysis_batch.contains(t)));
    assert_eq!(rec.calls.optimization_llm_calls, 4 + 1 + 2 + 2);
}

#[test]
fn ties_keep_incumbent() {
    let dir = tempfile::tempdir().unwrap();
    let backend = world().default_reply(
        RoleTag::Proposer,
        r#"[{"system_prompt": "another plain prompt"}]"#,
    );
    let clue = clue_with(backend, toy_config(), dir.path());
    let train = corpus(12);
    let mut state = clue.start(&seed(), &train).unwrap();
    let rec = clue.run_round(&mut state, &train).unwrap();
    assert_eq!(rec.eval_means[0].mean_reward, rec.eval_means[1].mean_reward);
    assert_eq!(rec.winner_id, "seed");
}

#[test]
fn failed_proposals_make_a_degenerate_round() {
    let dir = tempfile::tempdir().unwrap();
    let backend = world().default_reply(RoleTag::Proposer, "I refuse.");
    let clue = clue_with(backend, toy_config(), dir.path());
    let train = corpus(12);
    let mut state = clue.start(&seed(), &train).unwrap();
    let rec = clue.run_round(&mut state, &train).unwrap();
    assert!(rec.degenerate);
    assert_eq!(rec.winner_id, "seed");
    assert_eq!(rec.proposal_failures.len(), 2);
    assert_eq!(rec.calls.evaluation_calls, 4 + 6);
}

#[test]
fn evolve_is_deterministic_and_counts_calls() {
    let train = corpus(12);
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let clue = clue_with(world(), toy_config(), dir.path());
        let rounds = AtomicUsize::new(0);
        let res = clue
            .evolve_with_observer(&seed(), &train, &mut |_| {
                rounds.fetch_add(1, Ordering::SeqCst);
            })
            .unwrap();
        assert_eq!(rounds.load(Ordering::SeqCst), 2);
        serde_json::to_string(&res.lineage).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let lineage: Lineage = serde_json::from_str(&a).unwrap();
    assert_eq!(lineage.rounds.len(), 2);
    for r in &lineage.rounds {
        let c = r.candidates.len() as u64;
        assert_eq!(r.calls.evaluation_calls, 4 + (c + 1) * (4 + 2));
    }
}

#[test]
fn train_smaller_than_batch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let clue = clue_with(world(), toy_config(), dir.path());
    assert!(matches!(
        clue.evolve(&seed(), &corpus(3)),
        Err(EvolveError::TrainTooSmall { need: 4, have: 3 })
    ));
}
