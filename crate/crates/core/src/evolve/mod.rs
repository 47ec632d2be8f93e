//! Cluster-guided prompt evolution with tournament selection.
//!
//! One round: evaluate the incumbent on a fresh analysis batch, summarize each
//! pair log, cluster the summaries into extraction scenarios, analyze every
//! cluster with log-reading tools, ask the proposer for candidates, then
//! evaluate incumbent and candidates on a second batch and advance the best.

pub mod cluster;
mod stream;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::assets;
use crate::domain::{CallCounts, Cluster, ClusterPool, Example, PairLog, PromptCandidate, UsageCounters};
use crate::gateway::{RoleTag, ToolError, ToolHandler, ToolLoopError, ToolLoopStep, ToolOutcome, TranscriptEntry};
use crate::json_extract::first_array_or_object;
use crate::parallel::bounded_map;
use crate::runner::{memory_block, render_conversation, LogStore, RepetitionPolicy, Runner, StoreError};

use cluster::{assign_ids, parse_cluster_reply, repair, single_cluster, violations, ProposedCluster};
pub use stream::TrainStream;

/// Stored on a log when the summarizer call fails.
pub const SUMMARY_UNAVAILABLE: &str = "(summary unavailable)";
/// First line of a report cut off by the analyzer step budget.
pub const FORCED_FINAL_MARKER: &str = "[forced-final: analyzer step budget exhausted]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub num_rounds: u32,
    pub batch_x: usize,
    pub extra_sample_y: usize,
    pub num_candidates: usize,
    pub preview_chars: usize,
    pub max_clusters: usize,
    pub min_cluster_size: usize,
    pub max_analyzer_steps: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            num_rounds: 5,
            batch_x: 35,
            extra_sample_y: 10,
            num_candidates: 3,
            preview_chars: 4096,
            max_clusters: 7,
            min_cluster_size: 2,
            max_analyzer_steps: 20,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: String| Err(EvolveError::InvalidConfig(m));
        if self.num_rounds < 1 {
            return bad("num_rounds must be at least 1".into());
        }
        if self.batch_x < self.min_cluster_size || self.batch_x == 0 {
            return bad(format!(
                "batch_x ({}) must be positive and at least min_cluster_size ({})",
                self.batch_x, self.min_cluster_size
            ));
        }
        if self.extra_sample_y > self.batch_x {
            return bad("extra_sample_y cannot exceed batch_x".into());
        }
        if self.num_candidates < 1 {
            return bad("num_candidates must be at least 1".into());
        }
        if self.max_clusters < 1 || self.max_analyzer_steps < 1 || self.preview_chars < 1 {
            return bad("max_clusters, max_analyzer_steps and preview_chars must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("training set has {have} examples; at least {need} required")]
    TrainTooSmall { need: usize, have: usize },
    #[error("proposal failed: {0}")]
    ProposalFailed(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn truncate_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

pub fn render_summarizer_input(log: &PairLog, preview_chars: usize) -> String {
    let source = render_conversation(&log.source_conversation);
    let target = render_conversation(&log.target_conversation);
    let reward = log.target_reward.value().to_string();
    let memory = memory_block(&log.extracted_memory);
    assets::render(
        assets::SUMMARIZER,
        &[
            ("source_preview", truncate_chars(&source, preview_chars)),
            ("extracted_memory", &memory),
            ("target_preview", truncate_chars(&target, preview_chars)),
            ("target_reward", &reward),
        ],
    )
}

pub fn render_cluster_manager_input(summaries: &[(String, String)], pool: &ClusterPool) -> String {
    assets::render(
        assets::CLUSTER_MANAGER,
        &[
            ("existing_pool_section", &cluster::render_pool_section(pool)),
            ("batch_summaries", &cluster::render_batch_summaries(summaries)),
        ],
    )
}

pub fn render_analyzer_input(round: u32, cluster: &Cluster, logs_dir: &str, base_prompt: &str) -> String {
    let task_ids = cluster.task_ids.iter().cloned().collect::<Vec<_>>().join(", ");
    assets::render(
        assets::CLUSTER_ANALYZER,
        &[
            ("round_id", &round.to_string()),
            ("cluster_label", &cluster.label),
            ("cluster_description", &cluster.description),
            ("task_ids", &task_ids),
            ("num_cluster_examples", &cluster.task_ids.len().to_string()),
            ("logs_dir", logs_dir),
            ("base_prompt", base_prompt),
        ],
    )
}

/// `### cluster_id: label` then the report, blocks separated by a blank line.
pub fn render_analyses(analyses: &[ClusterAnalysis]) -> String {
    analyses
        .iter()
        .map(|a| format!("### {}: {}\n{}", a.cluster_id, a.label, a.report_text))
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn render_proposer_input(analyses: &[ClusterAnalysis], parent: &PromptCandidate) -> String {
    assets::render(
        assets::PROPOSER,
        &[
            ("num_clusters", &analyses.len().to_string()),
            ("cluster_analyses_text", &render_analyses(analyses)),
            ("parent_prompt_id", parent.prompt_id()),
            ("base_system_prompt", parent.text()),
        ],
    )
}

/// The first object of a proposer reply: `(system_prompt, rationale)`.
pub fn parse_proposal(text: &str) -> Result<(String, Option<String>), String> {
    let items = first_array_or_object(text).ok_or("no JSON array or object found")?;
    if items.len() > 1 {
        log::warn!("proposer returned {} objects; using the first", items.len());
    }
    let obj = items
        .first()
        .and_then(Value::as_object)
        .ok_or("the JSON array holds no object")?;
    let prompt = obj
        .get("system_prompt")
        .and_then(Value::as_str)
        .map(str::trim)
        .unwrap_or_default();
    if prompt.is_empty() {
        return Err("system_prompt is empty".into());
    }
    let rationale = obj
        .get("rationale")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from);
    Ok((prompt.to_string(), rationale))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub pool: ClusterPool,
    /// Manager calls made: 1, or 2 after a rejected first reply.
    pub attempts: u32,
    /// The accepted reply was fixed by the deterministic repair.
    pub repaired: bool,
    /// Neither reply parsed; the batch became a single cluster.
    pub fallback: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisStatus {
    Completed,
    ForcedFinal,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAnalysis {
    pub cluster_id: String,
    pub label: String,
    pub report_text: String,
    pub status: AnalysisStatus,
    pub transcript: Vec<TranscriptEntry>,
}

impl ClusterAnalysis {
    fn reads_with(&self, want: impl Fn(&ToolOutcome) -> bool) -> Vec<String> {
        let mut pending: Option<String> = None;
        let mut out = Vec::new();
        for e in &self.transcript {
            match e {
                TranscriptEntry::Model {
                    parsed: ToolLoopStep::ToolCall { name, arguments },
                    ..
                } if name == "read_pair_log" => {
                    pending = arguments.get("task_id").and_then(task_id_arg);
                }
                TranscriptEntry::Tool { name, outcome, .. } if name == "read_pair_log" => {
                    if want(outcome) {
                        out.push(pending.clone().unwrap_or_default());
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Task ids whose log content was returned to the model.
    pub fn successful_reads(&self) -> Vec<String> {
        self.reads_with(|o| matches!(o, ToolOutcome::Ok(_)))
    }

    pub fn denied_reads(&self) -> Vec<String> {
        self.reads_with(|o| matches!(o, ToolOutcome::AccessDenied(_)))
    }
}

fn task_id_arg(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// `list_cluster_tasks` and `read_pair_log`, confined to `members`.
pub fn analyzer_tools(
    store: Arc<LogStore>,
    members: BTreeSet<String>,
    round: u32,
    prompt_id: String,
) -> BTreeMap<String, ToolHandler> {
    let mut tools: BTreeMap<String, ToolHandler> = BTreeMap::new();
    let (s, m, p) = (store.clone(), members.clone(), prompt_id.clone());
    tools.insert(
        "list_cluster_tasks".into(),
        Box::new(move |_| {
            Ok(m.iter()
                .map(|t| match s.read_pair_log(t, round, &p) {
                    Ok(l) => format!("{t}\ttarget_reward={}", l.target_reward.value()),
                    Err(_) => format!("{t}\ttarget_reward=unknown"),
                })
                .collect::<Vec<_>>()
                .join("\n"))
        }),
    );
    tools.insert(
        "read_pair_log".into(),
        Box::new(move |args| {
            let id = args
                .get("task_id")
                .and_then(task_id_arg)
                .ok_or_else(|| ToolError::Failed("missing task_id argument".into()))?;
            if !members.contains(&id) {
                return Err(ToolError::AccessDenied(format!("task {id} is not in this cluster")));
            }
            let log = store
                .read_pair_log(&id, round, &prompt_id)
                .map_err(|e| ToolError::Failed(e.to_string()))?;
            Ok(serde_json::to_string_pretty(&log).expect("pair logs serialize"))
        }),
    );
    tools
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub cluster_id: String,
    pub status: AnalysisStatus,
    pub reads: Vec<String>,
    pub denied: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitorScore {
    pub prompt_id: String,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub incumbent_id: String,
    pub winner_id: String,
    /// No candidate could be proposed; the incumbent advanced unchallenged.
    pub degenerate: bool,
    pub analysis_batch: Vec<String>,
    pub eval_batch: Vec<String>,
    pub clusters: Vec<Cluster>,
    pub cluster_attempts: u32,
    pub cluster_repaired: bool,
    pub cluster_fallback: bool,
    pub analyses: Vec<AnalysisRecord>,
    pub candidates: Vec<PromptCandidate>,
    pub proposal_failures: Vec<String>,
    /// Incumbent first, then candidates in proposal order.
    pub eval_means: Vec<CompetitorScore>,
    pub calls: CallCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub evolver: String,
    pub config: EvolutionConfig,
    pub seed_prompt: PromptCandidate,
    pub rounds: Vec<RoundRecord>,
    pub winner: PromptCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub best: PromptCandidate,
    pub lineage: Lineage,
    pub usage: UsageCounters,
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub round: u32,
    pub incumbent: PromptCandidate,
    pub pool: ClusterPool,
    pub lineage: Vec<RoundRecord>,
    pub next_cluster_id: u32,
    pub stream: TrainStream,
}

/// Index of the winner in `means` (index 0 is the incumbent). Strictly
/// greater means win, so ties keep the incumbent, then the earliest
/// candidate.
pub fn select_winner(means: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    best
}

/// Extension point for prompt-evolution algorithms.
pub trait Evolver {
    fn name(&self) -> &str;
    fn evolve(&self, seed_prompt: &PromptCandidate, train: &[Example]) -> Result<EvolutionResult, EvolveError>;
}

/// The cluster-guided evolver.
pub struct Clue {
    runner: Runner,
    config: EvolutionConfig,
    analysis: Arc<LogStore>,
    tournament: Arc<LogStore>,
}

impl Clue {
    /// Pair logs go under `work_dir/analysis` and `work_dir/tournament`.
    pub fn new(runner: Runner, config: EvolutionConfig, work_dir: impl Into<PathBuf>) -> Result<Self, EvolveError> {
        config.validate()?;
        let work_dir = work_dir.into();
        Ok(Clue {
            runner,
            config,
            analysis: Arc::new(LogStore::open(work_dir.join("analysis"))?),
            tournament: Arc::new(LogStore::open(work_dir.join("tournament"))?),
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn runner(&self) -> &Runner {
        &self.runner
    }

    pub fn analysis_store(&self) -> &Arc<LogStore> {
        &self.analysis
    }

    pub fn tournament_store(&self) -> &Arc<LogStore> {
        &self.tournament
    }

    /// Trimmed summarizer reply, or [`SUMMARY_UNAVAILABLE`] on failure.
    pub fn summarize_example(&self, log: &PairLog) -> String {
        let gw = self.runner.gateway();
        let req = gw.request(
            RoleTag::Summarizer,
            "",
            render_summarizer_input(log, self.config.preview_chars),
        );
        match gw.complete(&req) {
            Ok(r) => r.text.trim().to_string(),
            Err(e) => {
                log::warn!("summary for {} unavailable: {e}", log.task_id);
                SUMMARY_UNAVAILABLE.to_string()
            }
        }
    }

    /// Summarizes every log, stores the summary on it and rewrites it.
    pub fn summarize_logs(&self, logs: &mut [PairLog]) -> Result<(), StoreError> {
        let summaries = bounded_map(logs, self.runner.max_in_flight(), |_, l| self.summarize_example(l));
        for (log, s) in logs.iter_mut().zip(summaries) {
            log.summary = Some(s);
            self.analysis.put(log)?;
        }
        Ok(())
    }

    fn ask_clusters(&self, user: String) -> Result<Vec<ProposedCluster>, String> {
        let gw = self.runner.gateway();
        let resp = gw
            .complete(&gw.request(RoleTag::ClusterManager, "", user))
            .map_err(|e| e.to_string())?;
        parse_cluster_reply(&resp.text)
    }

    /// One manager call, one corrective retry if needed, then deterministic
    /// repair; a single cluster only when neither reply parses.
    pub fn cluster_batch(
        &self,
        summaries: &[(String, String)],
        pool: &ClusterPool,
        next_cluster_id: &mut u32,
        round: u32,
    ) -> ClusterOutcome {
        let (max, min) = (self.config.max_clusters, self.config.min_cluster_size);
        let batch: Vec<String> = summaries.iter().map(|(t, _)| t.clone()).collect();
        let user = render_cluster_manager_input(summaries, pool);
        let first = self.ask_clusters(user.clone());
        let first_problems = match &first {
            Ok(c) => violations(c, &batch, max, min),
            Err(e) => vec![format!("the reply could not be parsed: {e}")],
        };
        let finish = |clusters: Vec<ProposedCluster>, attempts, repaired, fallback, violations, next: &mut u32| {
            ClusterOutcome {
                pool: assign_ids(clusters, pool, next, round),
                attempts,
                repaired,
                fallback,
                violations,
            }
        };
        if let (Ok(c), true) = (&first, first_problems.is_empty()) {
            return finish(c.clone(), 1, false, false, Vec::new(), next_cluster_id);
        }
        let retry = format!(
            "{user}\n\nYour previous reply was rejected:\n- {}\nReturn ONLY a corrected JSON object in the required format.",
            first_problems.join("\n- ")
        );
        let second = self.ask_clusters(retry);
        let smap: HashMap<String, String> = summaries.iter().cloned().collect();
        let mut problems = first_problems;
        match (first, second) {
            (_, Ok(c)) => {
                let v = violations(&c, &batch, max, min);
                if v.is_empty() {
                    finish(c, 2, false, false, problems, next_cluster_id)
                } else {
                    problems.extend(v);
                    finish(repair(c, &batch, &smap, max, min), 2, true, false, problems, next_cluster_id)
                }
            }
            (Ok(c), Err(e)) => {
                problems.push(format!("retry could not be parsed: {e}"));
                finish(repair(c, &batch, &smap, max, min), 2, true, false, problems, next_cluster_id)
            }
            (Err(_), Err(e)) => {
                problems.push(format!("retry could not be parsed: {e}"));
                finish(single_cluster(&batch), 2, false, true, problems, next_cluster_id)
            }
        }
    }

    /// Tool-using analysis of one cluster, reading the incumbent's logs for
    /// `round` from the analysis store.
    pub fn analyze_cluster(&self, cluster: &Cluster, round: u32, incumbent: &PromptCandidate) -> ClusterAnalysis {
        let gw = self.runner.gateway();
        let logs_dir = self.analysis.root().display().to_string();
        let req = gw.request(
            RoleTag::ClusterAnalyzer,
            assets::TOOL_PROTOCOL,
            render_analyzer_input(round, cluster, &logs_dir, incumbent.text()),
        );
        let tools = analyzer_tools(
            self.analysis.clone(),
            cluster.task_ids.clone(),
            round,
            incumbent.prompt_id().to_string(),
        );
        let (report_text, status, transcript) = match gw.run_tool_loop(&req, &tools, self.config.max_analyzer_steps) {
            Ok(out) => (out.final_text, AnalysisStatus::Completed, out.transcript),
            Err(ToolLoopError::StepBudgetExhausted { transcript, .. }) => {
                let last = transcript
                    .iter()
                    .rev()
                    .find_map(|e| match e {
                        TranscriptEntry::Model { text, .. } => Some(text.trim().to_string()),
                        _ => None,
                    })
                    .unwrap_or_default();
                (format!("{FORCED_FINAL_MARKER}\n{last}"), AnalysisStatus::ForcedFinal, transcript)
            }
            Err(ToolLoopError::UnknownTool { name, transcript }) => (
                format!("analysis failed: unknown tool {name:?}"),
                AnalysisStatus::Failed,
                transcript,
            ),
            Err(e) => (format!("analysis failed: {e}"), AnalysisStatus::Failed, Vec::new()),
        };
        ClusterAnalysis {
            cluster_id: cluster.cluster_id.clone(),
            label: cluster.label.clone(),
            report_text,
            status,
            transcript,
        }
    }

    /// Proposer call with one corrective retry. The candidate id is
    /// `r{round}-c{index}`.
    pub fn propose_prompt(
        &self,
        analyses: &[ClusterAnalysis],
        parent: &PromptCandidate,
        round: u32,
        index: usize,
    ) -> Result<PromptCandidate, EvolveError> {
        let gw = self.runner.gateway();
        let user = render_proposer_input(analyses, parent);
        let mut request_text = user.clone();
        let mut reason = String::new();
        for _ in 0..2 {
            let parsed = gw
                .complete(&gw.request(RoleTag::Proposer, "", request_text.clone()))
                .map_err(|e| e.to_string())
                .and_then(|r| parse_proposal(&r.text));
            match parsed {
                Ok((text, rationale)) => {
                    return PromptCandidate::proposed(
                        format!("r{round}-c{index}"),
                        parent.prompt_id(),
                        text,
                        round,
                        rationale,
                    )
                    .map_err(|e| EvolveError::ProposalFailed(e.to_string()));
                }
                Err(r) => {
                    reason = r;
                    request_text = format!(
                        "{user}\n\nYour previous reply was rejected: {reason}\nReturn a JSON array with exactly 1 object whose \"system_prompt\" is a non-empty prompt."
                    );
                }
            }
        }
        Err(EvolveError::ProposalFailed(reason))
    }

    pub fn start(&self, seed_prompt: &PromptCandidate, train: &[Example]) -> Result<EvolutionState, EvolveError> {
        if train.len() < self.config.batch_x {
            return Err(EvolveError::TrainTooSmall {
                need: self.config.batch_x,
                have: train.len(),
            });
        }
        Ok(EvolutionState {
            round: 0,
            incumbent: seed_prompt.clone(),
            pool: ClusterPool::default(),
            lineage: Vec::new(),
            next_cluster_id: 1,
            stream: TrainStream::new(train.len(), self.config.seed),
        })
    }

    pub fn run_round(&self, state: &mut EvolutionState, train: &[Example]) -> Result<RoundRecord, EvolveError> {
        let cfg = &self.config;
        let gw = self.runner.gateway();
        let before = gw.usage();
        let round = state.round + 1;
        let pick = |idx: &[usize]| idx.iter().map(|&i| train[i].clone()).collect::<Vec<_>>();

        // (1) analysis batch and incumbent logs
        let analysis_idx = state.stream.next_batch(cfg.batch_x, &HashSet::new());
        let analysis_batch = pick(&analysis_idx);
        let mut logs = self
            .runner
            .evaluate_prompt(
                &state.incumbent,
                &analysis_batch,
                RepetitionPolicy::Fixed(1),
                round,
                Some(&self.analysis),
            )?
            .logs;

        // (2) summaries, (3) clusters
        self.summarize_logs(&mut logs)?;
        let summaries: Vec<(String, String)> = logs
            .iter()
            .map(|l| (l.task_id.clone(), l.summary.clone().unwrap_or_default()))
            .collect();
        let outcome = self.cluster_batch(&summaries, &state.pool, &mut state.next_cluster_id, round);

        // (4) per-cluster analyses
        let analyses = bounded_map(&outcome.pool.clusters, self.runner.max_in_flight(), |_, c| {
            self.analyze_cluster(c, round, &state.incumbent)
        });
        let usable: Vec<ClusterAnalysis> = analyses
            .iter()
            .filter(|a| a.status != AnalysisStatus::Failed)
            .cloned()
            .collect();

        // (5) independent proposals
        let mut candidates = Vec::new();
        let mut proposal_failures = Vec::new();
        if usable.is_empty() {
            proposal_failures.push("no usable cluster analysis".to_string());
        } else {
            let slots: Vec<usize> = (1..=cfg.num_candidates).collect();
            for r in bounded_map(&slots, self.runner.max_in_flight(), |_, &i| {
                self.propose_prompt(&usable, &state.incumbent, round, i)
            }) {
                match r {
                    Ok(c) => candidates.push(c),
                    Err(e) => proposal_failures.push(e.to_string()),
                }
            }
        }

        // (6) eval batch: fresh examples plus a sample of the analysis batch
        let exclude: HashSet<usize> = analysis_idx.iter().copied().collect();
        let mut eval_idx = state.stream.next_batch(cfg.batch_x, &exclude);
        eval_idx.extend(state.stream.sample(&analysis_idx, cfg.extra_sample_y));
        let eval_set = pick(&eval_idx);

        // (7) tournament, (8) winner
        let mut eval_means = Vec::with_capacity(candidates.len() + 1);
        for p in std::iter::once(&state.incumbent).chain(candidates.iter()) {
            let ev = self.runner.evaluate_prompt(
                p,
                &eval_set,
                RepetitionPolicy::Fixed(1),
                round,
                Some(&self.tournament),
            )?;
            eval_means.push(CompetitorScore {
                prompt_id: p.prompt_id().to_string(),
                mean_reward: ev.mean_reward(),
            });
        }
        let w = select_winner(&eval_means.iter().map(|c| c.mean_reward).collect::<Vec<_>>());
        let incumbent_id = state.incumbent.prompt_id().to_string();
        if w > 0 {
            state.incumbent = candidates[w - 1].clone();
        }
        let record = RoundRecord {
            round,
            incumbent_id,
            winner_id: state.incumbent.prompt_id().to_string(),
            degenerate: candidates.is_empty(),
            analysis_batch: analysis_batch.iter().map(|e| e.task_id.clone()).collect(),
            eval_batch: eval_set.iter().map(|e| e.task_id.clone()).collect(),
            clusters: outcome.pool.clusters.clone(),
            cluster_attempts: outcome.attempts,
            cluster_repaired: outcome.repaired,
            cluster_fallback: outcome.fallback,
            analyses: analyses
                .iter()
                .map(|a| AnalysisRecord {
                    cluster_id: a.cluster_id.clone(),
                    status: a.status,
                    reads: a.successful_reads(),
                    denied: a.denied_reads(),
                })
                .collect(),
            candidates,
            proposal_failures,
            eval_means,
            calls: gw.usage().since(&before).into(),
        };
        state.round = round;
        state.pool = outcome.pool;
        state.lineage.push(record.clone());
        Ok(record)
    }

    /// Runs every round, calling `observer` after each.
    pub fn evolve_with_observer(
        &self,
        seed_prompt: &PromptCandidate,
        train: &[Example],
        observer: &mut dyn FnMut(&RoundRecord),
    ) -> Result<EvolutionResult, EvolveError> {
        let before = self.runner.gateway().usage();
        let mut state = self.start(seed_prompt, train)?;
        for _ in 0..self.config.num_rounds {
            let record = self.run_round(&mut state, train)?;
            log::info!(
                "round {}: winner {} ({} candidates)",
                record.round,
                record.winner_id,
                record.candidates.len()
            );
            observer(&record);
        }
        Ok(EvolutionResult {
            best: state.incumbent.clone(),
            lineage: Lineage {
                evolver: self.name().to_string(),
                config: self.config.clone(),
                seed_prompt: seed_prompt.clone(),
                rounds: state.lineage,
                winner: state.incumbent,
            },
            usage: self.runner.gateway().usage().since(&before),
        })
    }
}

impl Evolver for Clue {
    fn name(&self) -> &str {
        "clue"
    }

    fn evolve(&self, seed_prompt: &PromptCandidate, train: &[Example]) -> Result<EvolutionResult, EvolveError> {
        self.evolve_with_observer(seed_prompt, train, &mut |_| {})
    }
}

#[cfg(test)]
mod tests;
