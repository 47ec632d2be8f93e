//! Extract, answer, score.
//!
//! [`Runner::run_pair`] composes the three stages for one example and never
//! fails on a model error: the pair is scored 0 with a diagnostic so that
//! batch evaluation stays total.

mod store;

use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::assets;
use crate::domain::{
    render_numbered, Conversation, DatasetStats, EvalReport, Example, MemorySet, Message, PairLog, PromptCandidate,
    Reward,
};
use crate::gateway::{Gateway, GatewayError, RoleTag};
use crate::metrics;
use crate::parallel::bounded_map;
use crate::reward::Scorer;

pub use store::{LogFilter, LogKey, LogStore, StoreError};

/// `<conversation>` wrapper with one `<role>content</role>` line per message.
pub fn render_conversation(conversation: &Conversation) -> String {
    let mut out = String::from("<conversation>\n");
    for m in conversation.messages() {
        let role = m.role().as_str();
        out.push_str(&format!("<{role}>{}</{role}>\n", m.content()));
    }
    out.push_str("</conversation>");
    out
}

pub fn render_extraction_input(example: &Example) -> String {
    render_conversation(&example.source_conversation)
}

static ITEM_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\d+[.)]\s+").unwrap());

/// Items of a numbered list. Lines after an item that do not start a new
/// item are joined to it with a space; text before the first item is
/// dropped. Without any numbered item the whole trimmed text is one item.
pub fn parse_numbered_list(text: &str) -> Vec<String> {
    let mut items: Vec<String> = Vec::new();
    for line in text.lines() {
        if let Some(m) = ITEM_START.find(line) {
            items.push(line[m.end()..].trim().to_string());
        } else if let Some(last) = items.last_mut() {
            let cont = line.trim();
            if !cont.is_empty() {
                if !last.is_empty() {
                    last.push(' ');
                }
                last.push_str(cont);
            }
        }
    }
    items.retain(|i| !i.is_empty());
    if items.is_empty() {
        let whole = text.trim();
        if !whole.is_empty() {
            items.push(whole.to_string());
        }
    }
    items
}

/// Generator input. `None` sends the query alone (memory-free baseline);
/// `Some` fills the generation template, where an empty block becomes the
/// no-memory sentinel.
pub fn render_generation_input(query: &str, memory_block: Option<&str>) -> String {
    match memory_block {
        None => query.to_string(),
        Some(block) => {
            let block = if block.trim().is_empty() {
                assets::NO_MEMORY_SENTINEL
            } else {
                block
            };
            assets::render(assets::GENERATION, &[("memory", block), ("query", query)])
        }
    }
}

/// Memory block for a memory set: a numbered list, or the sentinel.
pub fn memory_block(memory: &MemorySet) -> String {
    if memory.is_empty() {
        assets::NO_MEMORY_SENTINEL.to_string()
    } else {
        render_numbered(memory.items())
    }
}

/// The memory-free baseline. Extraction is skipped and the generator sees
/// only the target query.
pub fn no_memory_prompt() -> PromptCandidate {
    PromptCandidate::seed(assets::NO_MEMORY_PROMPT_ID, "(memory-free baseline)").expect("non-empty text")
}

pub fn is_no_memory(prompt: &PromptCandidate) -> bool {
    prompt.prompt_id() == assets::NO_MEMORY_PROMPT_ID
}

/// How many times each dataset is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepetitionPolicy {
    Fixed(u32),
    /// `below` repetitions for datasets with fewer than `threshold`
    /// examples, `at_or_above` otherwise.
    BySize {
        threshold: usize,
        below: u32,
        at_or_above: u32,
    },
}

impl Default for RepetitionPolicy {
    fn default() -> Self {
        RepetitionPolicy::BySize {
            threshold: 200,
            below: 3,
            at_or_above: 1,
        }
    }
}

impl RepetitionPolicy {
    pub fn for_size(&self, n_examples: usize) -> u32 {
        let reps = match *self {
            RepetitionPolicy::Fixed(n) => n,
            RepetitionPolicy::BySize {
                threshold,
                below,
                at_or_above,
            } => {
                if n_examples < threshold {
                    below
                } else {
                    at_or_above
                }
            }
        };
        reps.max(1)
    }
}

/// A report plus every pair log behind it, in (example, repetition) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub logs: Vec<PairLog>,
}

impl Evaluation {
    /// Plain mean reward over every pair.
    pub fn mean_reward(&self) -> f64 {
        if self.logs.is_empty() {
            return 0.0;
        }
        self.logs.iter().map(|l| l.target_reward.value()).sum::<f64>() / self.logs.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct Runner {
    gateway: Arc<Gateway>,
    scorer: Scorer,
    max_in_flight: usize,
}

impl Runner {
    /// A runner whose scorer uses the same gateway for judge calls.
    pub fn new(gateway: Arc<Gateway>) -> Self {
        Runner {
            scorer: Scorer::new().with_judge(gateway.clone()),
            gateway,
            max_in_flight: 1,
        }
    }

    pub fn with_scorer(mut self, scorer: Scorer) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn with_max_in_flight(mut self, max_in_flight: usize) -> Self {
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    pub fn extract_memory(&self, prompt: &PromptCandidate, example: &Example) -> Result<MemorySet, GatewayError> {
        self.extract_memory_from(prompt, &example.source_conversation)
    }

    /// Prompt text as system, rendered conversation as user, extractor role.
    pub fn extract_memory_from(
        &self,
        prompt: &PromptCandidate,
        conversation: &Conversation,
    ) -> Result<MemorySet, GatewayError> {
        let req = self
            .gateway
            .request(RoleTag::Extractor, prompt.text(), render_conversation(conversation));
        let resp = self.gateway.complete(&req)?;
        Ok(MemorySet::from_raw(resp.text))
    }

    /// Answers the target query with `memory_block` injected (see
    /// [`render_generation_input`]). Returns the response and the target
    /// conversation `[user: generator input, assistant: response]`.
    pub fn answer(&self, query: &str, memory_block: Option<&str>) -> Result<(String, Conversation), GatewayError> {
        let input = render_generation_input(query, memory_block);
        let resp = self
            .gateway
            .complete(&self.gateway.request(RoleTag::Generator, "", input.clone()))?;
        let conversation = Conversation::new(vec![
            Message::user(input).expect("generator input contains the non-empty query"),
            Message::assistant(resp.text.clone()).expect("gateway rejects empty responses"),
        ])
        .expect("two messages");
        Ok((resp.text, conversation))
    }

    pub fn answer_with_memory(
        &self,
        example: &Example,
        memory: &MemorySet,
    ) -> Result<(String, Conversation), GatewayError> {
        self.answer(&example.target_query, Some(&memory_block(memory)))
    }

    /// Extract, answer and score one example. Model and scoring failures
    /// yield reward 0 with a diagnostic; only store failures are errors.
    pub fn run_pair(
        &self,
        prompt: &PromptCandidate,
        example: &Example,
        round: u32,
        repetition: u32,
        store: Option<&LogStore>,
    ) -> Result<PairLog, StoreError> {
        let log = self.pair_log(prompt, example, round, repetition);
        if let Some(store) = store {
            store.put(&log)?;
        }
        Ok(log)
    }

    fn pair_log(&self, prompt: &PromptCandidate, example: &Example, round: u32, repetition: u32) -> PairLog {
        let query_only = || Conversation::new(vec![Message::user(example.target_query.clone()).expect("validated")]);
        let mut log = PairLog {
            task_id: example.task_id.clone(),
            dataset_id: example.dataset_id.clone(),
            prompt_id: prompt.prompt_id().to_string(),
            round,
            repetition,
            source_conversation: example.source_conversation.clone(),
            extracted_memory: MemorySet::empty(),
            target_conversation: query_only().expect("one message"),
            target_reward: Reward::ZERO,
            summary: None,
            diagnostic: None,
        };
        let answered = if is_no_memory(prompt) {
            self.answer(&example.target_query, None)
        } else {
            match self.extract_memory(prompt, example) {
                Ok(memory) => {
                    log.extracted_memory = memory;
                    self.answer_with_memory(example, &log.extracted_memory)
                }
                Err(e) => {
                    log.diagnostic = Some(format!("extraction failed: {e}"));
                    return log;
                }
            }
        };
        let (response, target) = match answered {
            Ok(r) => r,
            Err(e) => {
                log.diagnostic = Some(format!("generation failed: {e}"));
                return log;
            }
        };
        log.target_conversation = target;
        match self.scorer.score(&example.reward_spec, &response, example) {
            Ok(scored) => {
                log.target_reward = scored.reward;
                log.diagnostic = scored.diagnostic;
            }
            Err(e) => log.diagnostic = Some(format!("scoring failed: {e}")),
        }
        log
    }

    /// Runs every example `policy.for_size(dataset size)` times with bounded
    /// parallelism and aggregates per dataset.
    pub fn evaluate_prompt(
        &self,
        prompt: &PromptCandidate,
        examples: &[Example],
        policy: RepetitionPolicy,
        round: u32,
        store: Option<&LogStore>,
    ) -> Result<Evaluation, StoreError> {
        let before = self.gateway.usage();
        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for e in examples {
            *sizes.entry(e.dataset_id.as_str()).or_default() += 1;
        }
        let work: Vec<(&Example, u32)> = examples
            .iter()
            .flat_map(|e| (0..policy.for_size(sizes[e.dataset_id.as_str()])).map(move |r| (e, r)))
            .collect();
        let logs = bounded_map(&work, self.max_in_flight, |_, (e, rep)| {
            self.run_pair(prompt, e, round, *rep, store)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let report = aggregate(prompt.prompt_id(), examples, &logs, self.gateway.usage().since(&before));
        Ok(Evaluation { report, logs })
    }
}

fn aggregate(
    prompt_id: &str,
    examples: &[Example],
    logs: &[PairLog],
    usage: crate::domain::UsageCounters,
) -> EvalReport {
    // dataset -> repetition -> rewards
    let mut by_dataset: BTreeMap<&str, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for l in logs {
        by_dataset
            .entry(l.dataset_id.as_str())
            .or_default()
            .entry(l.repetition)
            .or_default()
            .push(l.target_reward.value());
    }
    let mut per_dataset = BTreeMap::new();
    for (dataset, reps) in by_dataset {
        let all: Vec<f64> = reps.values().flatten().copied().collect();
        let rep_means: Vec<f64> = reps
            .values()
            .map(|r| metrics::dataset_mean(r).expect("non-empty"))
            .collect();
        let members: Vec<&Example> = examples.iter().filter(|e| e.dataset_id == dataset).collect();
        let category = members.first().and_then(|e| e.category);
        per_dataset.insert(
            dataset.to_string(),
            DatasetStats {
                mean_reward: metrics::dataset_mean(&all).expect("non-empty"),
                n_examples: members.len(),
                n_repetitions: reps.len() as u32,
                repetition_std: metrics::population_std(&rep_means),
                category,
            },
        );
    }
    let means: BTreeMap<String, f64> = per_dataset.iter().map(|(k, v)| (k.clone(), v.mean_reward)).collect();
    EvalReport {
        prompt_id: prompt_id.to_string(),
        macro_accuracy: metrics::macro_accuracy(&means).unwrap_or(0.0),
        per_dataset,
        relative_gain: None,
        base_prompt_id: None,
        excluded_datasets: Vec::new(),
        usage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Role;
    use crate::gateway::{RetryPolicy, ScriptedBackend, ScriptedReply};
    use crate::reward::RewardSpec;

    fn example(id: &str, dataset: &str, gold: &str) -> Example {
        Example::new(
            id,
            dataset,
            None,
            Conversation::from_pairs([(Role::User, "I like tea"), (Role::Assistant, "Noted")]).unwrap(),
            format!("question {id}"),
            RewardSpec::ExactMatch {
                gold: gold.into(),
                aliases: vec![],
            },
        )
        .unwrap()
    }

    fn runner(backend: ScriptedBackend) -> Runner {
        Runner::new(Arc::new(
            Gateway::builder()
                .route_all(Arc::new(backend))
                .retry(RetryPolicy::no_delay(0))
                .build(),
        ))
    }

    #[test]
    fn renders_conversation() {
        let c = Conversation::from_pairs([(Role::User, "hi"), (Role::Assistant, "hello")]).unwrap();
        assert_eq!(
            render_conversation(&c),
            "<conversation>\n<user>hi</user>\n<assistant>hello</assistant>\n</conversation>"
        );
        let t = Conversation::from_pairs([(Role::Tool, "out")]).unwrap();
        assert_eq!(render_conversation(&t), "<conversation>\n<tool>out</tool>\n</conversation>");
    }

    #[test]
    fn numbered_lists() {
        assert_eq!(parse_numbered_list("1. A\n2. B"), vec!["A", "B"]);
        assert_eq!(parse_numbered_list("Here are memories:\n1. X\n   cont\n2. Y"), vec!["X cont", "Y"]);
        assert_eq!(parse_numbered_list("no numbering at all"), vec!["no numbering at all"]);
        assert_eq!(parse_numbered_list("1) A\n\n 2) B\n"), vec!["A", "B"]);
        assert!(parse_numbered_list("   ").is_empty());
    }

    #[test]
    fn generation_input() {
        assert_eq!(render_generation_input("Q?", None), "Q?");
        let s = render_generation_input("Q?", Some(""));
        assert!(s.contains("<memory>\n(no memory)\n</memory>"));
        assert!(s.ends_with("\n\nQ?"));
        let m = MemorySet::from_items(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(memory_block(&m), "1. a\n2. b");
    }

    #[test]
    fn extraction_request_shape() {
        let backend = Arc::new(ScriptedBackend::new().default_reply(RoleTag::Extractor, "1. fact"));
        let gw = Arc::new(Gateway::builder().route_all(backend.clone()).build());
        let r = Runner::new(gw);
        let p = PromptCandidate::seed("simple", assets::SIMPLE).unwrap();
        let m = r.extract_memory(&p, &example("t", "d", "x")).unwrap();
        assert_eq!(m.items(), ["fact"]);
        let req = &backend.requests()[0];
        assert!(req.system_text.contains("Extract at most 5 memories in total"));
        assert!(req.user_text.starts_with("<conversation>\n<user>I like tea</user>"));
    }

    #[test]
    fn generator_sees_memory() {
        let backend = ScriptedBackend::new()
            .default_reply(RoleTag::Extractor, "1. likes tea")
            .responder(RoleTag::Generator, |req| Some(ScriptedReply::Text(req.user_text.clone())));
        let r = runner(backend);
        let p = PromptCandidate::seed("p", "extract").unwrap();
        let log = r.run_pair(&p, &example("t", "d", "x"), 0, 0, None).unwrap();
        assert!(log.target_conversation.messages()[1].content().contains("1. likes tea"));
    }

    #[test]
    fn baseline_skips_extraction() {
        let backend = Arc::new(ScriptedBackend::new().default_reply(RoleTag::Generator, "x"));
        let gw = Arc::new(Gateway::builder().route_all(backend.clone()).build());
        let r = Runner::new(gw.clone());
        let log = r.run_pair(&no_memory_prompt(), &example("t", "d", "x"), 0, 0, None).unwrap();
        assert_eq!(log.target_reward, Reward::ONE);
        assert_eq!(gw.usage().extraction_calls, 0);
        assert_eq!(backend.requests()[0].user_text, "question t");
    }

    #[test]
    fn extractor_failure_scores_zero_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let backend = ScriptedBackend::new()
            .default(RoleTag::Extractor, ScriptedReply::Permanent("boom".into()))
            .default_reply(RoleTag::Generator, "x");
        let r = runner(backend);
        let p = PromptCandidate::seed("p", "extract").unwrap();
        let log = r.run_pair(&p, &example("t", "d", "x"), 2, 0, Some(&store)).unwrap();
        assert_eq!(log.target_reward, Reward::ZERO);
        assert!(log.diagnostic.as_deref().unwrap().starts_with("extraction failed"));
        assert_eq!(store.read_pair_log("t", 2, "p").unwrap(), log);
        assert_eq!(r.gateway().usage().evaluation_calls, 0);
    }

    #[test]
    fn empty_extraction_is_response_empty() {
        let r = runner(ScriptedBackend::new().default_reply(RoleTag::Extractor, "  "));
        let p = PromptCandidate::seed("p", "extract").unwrap();
        assert_eq!(
            r.extract_memory(&p, &example("t", "d", "x")).unwrap_err(),
            GatewayError::ResponseEmpty(RoleTag::Extractor)
        );
    }

    #[test]
    fn repetition_statistics() {
        let backend = ScriptedBackend::new().default_reply(RoleTag::Extractor, "1. m").fallback(
            RoleTag::Generator,
            vec!["x".into(), "y".into(), "x".into()],
        );
        let r = runner(backend);
        let p = PromptCandidate::seed("p", "extract").unwrap();
        let ev = r
            .evaluate_prompt(&p, &[example("t", "d", "x")], RepetitionPolicy::Fixed(3), 0, None)
            .unwrap();
        let s = &ev.report.per_dataset["d"];
        assert!((s.mean_reward - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.n_repetitions, 3);
        assert!((s.repetition_std - (2.0f64).sqrt() / 3.0).abs() < 1e-12);
        assert_eq!(ev.report.usage.evaluation_calls, 3);
    }

    #[test]
    fn all_correct_has_zero_std() {
        let r = runner(
            ScriptedBackend::new()
                .default_reply(RoleTag::Extractor, "1. m")
                .default_reply(RoleTag::Generator, "x"),
        );
        let p = PromptCandidate::seed("p", "extract").unwrap();
        let ex = [example("a", "d", "x"), example("b", "d", "x")];
        let ev = r.evaluate_prompt(&p, &ex, RepetitionPolicy::Fixed(3), 0, None).unwrap();
        assert_eq!(ev.report.per_dataset["d"].mean_reward, 1.0);
        assert_eq!(ev.report.per_dataset["d"].repetition_std, 0.0);
        assert_eq!(ev.report.usage.evaluation_calls, 6);
        assert_eq!(ev.logs.len(), 6);
    }

    #[test]
    fn repetition_policy() {
        let p = RepetitionPolicy::default();
        assert_eq!(p.for_size(10), 3);
        assert_eq!(p.for_size(199), 3);
        assert_eq!(p.for_size(200), 1);
        assert_eq!(RepetitionPolicy::Fixed(0).for_size(5), 1);
    }
}
