//! Core data model.
//!
//! Every type validates its invariants when it is constructed, either through
//! a `new`/`try_from` constructor or during deserialization, so downstream
//! modules can rely on them without re-checking.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::RewardSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("message content must not be empty")]
    EmptyMessage,
    #[error("conversation must contain at least one message")]
    EmptyConversation,
    #[error("duplicate task id {0:?}")]
    DuplicateTaskId(String),
    #[error("invalid example {task_id:?}: {reason}")]
    InvalidExample { task_id: String, reason: String },
    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("invalid prompt candidate {prompt_id:?}: {reason}")]
    InvalidPrompt { prompt_id: String, reason: String },
    #[error("memory items must be non-empty strings")]
    EmptyMemoryItem,
    #[error("invalid cluster {cluster_id:?}: {reason}")]
    InvalidCluster { cluster_id: String, reason: String },
    #[error("corpus must contain at least one example")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMessage")]
pub struct Message {
    role: Role,
    content: String,
}

#[derive(Deserialize)]
struct RawMessage {
    role: Role,
    content: String,
}

impl TryFrom<RawMessage> for Message {
    type Error = DomainError;

    fn try_from(raw: RawMessage) -> Result<Self, Self::Error> {
        Message::new(raw.role, raw.content)
    }
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Result<Self, DomainError> {
        let content = content.into();
        if content.trim().is_empty() {
            return Err(DomainError::EmptyMessage);
        }
        Ok(Message { role, content })
    }

    pub fn user(content: impl Into<String>) -> Result<Self, DomainError> {
        Message::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Result<Self, DomainError> {
        Message::new(Role::Assistant, content)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn content(&self) -> &str {
        &self.content
    }
}

/// An ordered, non-empty sequence of messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Message>", into = "Vec<Message>")]
pub struct Conversation {
    messages: Vec<Message>,
}

impl TryFrom<Vec<Message>> for Conversation {
    type Error = DomainError;

    fn try_from(messages: Vec<Message>) -> Result<Self, Self::Error> {
        Conversation::new(messages)
    }
}

impl From<Conversation> for Vec<Message> {
    fn from(c: Conversation) -> Self {
        c.messages
    }
}

impl Conversation {
    pub fn new(messages: Vec<Message>) -> Result<Self, DomainError> {
        if messages.is_empty() {
            return Err(DomainError::EmptyConversation);
        }
        Ok(Conversation { messages })
    }

    /// Convenience constructor from `(role, content)` pairs.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = (Role, &'a str)>,
    {
        let messages = pairs
            .into_iter()
            .map(|(role, content)| Message::new(role, content))
            .collect::<Result<Vec<_>, _>>()?;
        Conversation::new(messages)
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Personalization,
    ProblemSolving,
    Agentic,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Personalization,
        Category::ProblemSolving,
        Category::Agentic,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Category::Personalization => "Personalization",
            Category::ProblemSolving => "Problem-Solving",
            Category::Agentic => "Agentic",
        }
    }
}

/// One `(source conversation, target query, reward spec)` triplet.
///
/// `category` is report metadata only. It is never rendered into any model
/// request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub task_id: String,
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub source_conversation: Conversation,
    pub target_query: String,
    pub reward_spec: RewardSpec,
}

impl Example {
    pub fn new(
        task_id: impl Into<String>,
        dataset_id: impl Into<String>,
        category: Option<Category>,
        source_conversation: Conversation,
        target_query: impl Into<String>,
        reward_spec: RewardSpec,
    ) -> Result<Self, DomainError> {
        let example = Example {
            task_id: task_id.into(),
            dataset_id: dataset_id.into(),
            category,
            source_conversation,
            target_query: target_query.into(),
            reward_spec,
        };
        example.validate()?;
        Ok(example)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let invalid = |reason: &str| DomainError::InvalidExample {
            task_id: self.task_id.clone(),
            reason: reason.to_string(),
        };
        if self.task_id.is_empty() {
            return Err(invalid("task_id is empty"));
        }
        if self.dataset_id.trim().is_empty() {
            return Err(invalid("dataset_id is empty"));
        }
        if self.target_query.trim().is_empty() {
            return Err(invalid("target_query is empty"));
        }
        self.reward_spec
            .validate()
            .map_err(|e| invalid(&e.to_string()))
    }
}

/// A corpus whose examples passed [`validate_corpus`]. Order is ingestion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    examples: Vec<Example>,
}

impl Corpus {
    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, task_id: &str) -> Option<&Example> {
        self.examples.iter().find(|e| e.task_id == task_id)
    }
}

pub fn validate_corpus(examples: Vec<Example>) -> Result<Corpus, DomainError> {
    if examples.is_empty() {
        return Err(DomainError::EmptyCorpus);
    }
    let mut seen = HashSet::with_capacity(examples.len());
    for example in &examples {
        example.validate()?;
        if !seen.insert(example.task_id.as_str()) {
            return Err(DomainError::DuplicateTaskId(example.task_id.clone()));
        }
    }
    Ok(Corpus { examples })
}

/// Memories parsed from an extraction reply.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MemorySet {
    items: Vec<String>,
    raw_text: String,
}

impl MemorySet {
    /// Parses `raw_text` with the numbered-list parser.
    pub fn from_raw(raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let items = crate::runner::parse_numbered_list(&raw_text);
        MemorySet { items, raw_text }
    }

    pub fn from_items(items: Vec<String>) -> Result<Self, DomainError> {
        if items.iter().any(|i| i.trim().is_empty()) {
            return Err(DomainError::EmptyMemoryItem);
        }
        let raw_text = render_numbered(&items);
        Ok(MemorySet { items, raw_text })
    }

    pub fn empty() -> Self {
        MemorySet::default()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub(crate) fn render_numbered(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| format!("{}. {}", i + 1, item))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SeedAsset,
    Proposed,
}

/// A versioned extraction prompt with lineage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPrompt")]
pub struct PromptCandidate {
    prompt_id: String,
    parent_id: Option<String>,
    text: String,
    provenance: Provenance,
    round: u32,
    rationale: Option<String>,
}

#[derive(Deserialize)]
struct RawPrompt {
    prompt_id: String,
    parent_id: Option<String>,
    text: String,
    provenance: Provenance,
    round: u32,
    rationale: Option<String>,
}

impl TryFrom<RawPrompt> for PromptCandidate {
    type Error = DomainError;

    fn try_from(r: RawPrompt) -> Result<Self, Self::Error> {
        PromptCandidate::build(r.prompt_id, r.parent_id, r.text, r.provenance, r.round, r.rationale)
    }
}

impl PromptCandidate {
    pub fn seed(prompt_id: impl Into<String>, text: impl Into<String>) -> Result<Self, DomainError> {
        PromptCandidate::build(prompt_id.into(), None, text.into(), Provenance::SeedAsset, 0, None)
    }

    pub fn proposed(
        prompt_id: impl Into<String>,
        parent_id: impl Into<String>,
        text: impl Into<String>,
        round: u32,
        rationale: Option<String>,
    ) -> Result<Self, DomainError> {
        PromptCandidate::build(
            prompt_id.into(),
            Some(parent_id.into()),
            text.into(),
            Provenance::Proposed,
            round,
            rationale,
        )
    }

    fn build(
        prompt_id: String,
        parent_id: Option<String>,
        text: String,
        provenance: Provenance,
        round: u32,
        rationale: Option<String>,
    ) -> Result<Self, DomainError> {
        let invalid = |reason: &str| DomainError::InvalidPrompt {
            prompt_id: prompt_id.clone(),
            reason: reason.to_string(),
        };
        if prompt_id.is_empty() {
            return Err(invalid("prompt_id is empty"));
        }
        if text.trim().is_empty() {
            return Err(invalid("text is empty"));
        }
        match (provenance, parent_id.is_some()) {
            (Provenance::Proposed, false) => return Err(invalid("proposed prompt needs a parent_id")),
            (Provenance::SeedAsset, true) => return Err(invalid("seed prompt cannot have a parent_id")),
            _ => {}
        }
        Ok(PromptCandidate {
            prompt_id,
            parent_id,
            text,
            provenance,
            round,
            rationale,
        })
    }

    pub fn prompt_id(&self) -> &str {
        &self.prompt_id
    }

    pub fn parent_id(&self) -> Option<&str> {
        self.parent_id.as_deref()
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn rationale(&self) -> Option<&str> {
        self.rationale.as_deref()
    }
}

/// A reward in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Reward(f64);

impl Reward {
    pub const ZERO: Reward = Reward(0.0);
    pub const ONE: Reward = Reward(1.0);

    pub fn new(value: f64) -> Result<Self, DomainError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Reward(value))
        } else {
            Err(DomainError::RewardOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Reward {
    type Error = DomainError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Reward::new(v)
    }
}

impl From<Reward> for f64 {
    fn from(r: Reward) -> f64 {
        r.0
    }
}

/// The persisted record of one extraction attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLog {
    pub task_id: String,
    pub dataset_id: String,
    pub prompt_id: String,
    pub round: u32,
    /// Evaluation repetition index; zero outside repeated evaluation.
    #[serde(default)]
    pub repetition: u32,
    pub source_conversation: Conversation,
    pub extracted_memory: MemorySet,
    pub target_conversation: Conversation,
    pub target_reward: Reward,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// A group of batch examples that share an extraction scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: String,
    pub label: String,
    pub description: String,
    pub task_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterPool {
    pub clusters: Vec<Cluster>,
    pub round_updated: u32,
}

impl ClusterPool {
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    /// Checks the partition, size and count invariants against a batch.
    pub fn check_partition(
        &self,
        batch: &[String],
        max_clusters: usize,
        min_cluster_size: usize,
    ) -> Result<(), DomainError> {
        let invalid = |id: &str, reason: String| DomainError::InvalidCluster {
            cluster_id: id.to_string(),
            reason,
        };
        if self.clusters.len() > max_clusters {
            return Err(invalid("*", format!("{} clusters exceed {max_clusters}", self.clusters.len())));
        }
        let mut ids = HashSet::new();
        let mut seen = HashSet::new();
        for c in &self.clusters {
            if !ids.insert(c.cluster_id.as_str()) {
                return Err(invalid(&c.cluster_id, "duplicate cluster id".into()));
            }
            if c.task_ids.len() < min_cluster_size.min(batch.len()) {
                return Err(invalid(&c.cluster_id, format!("only {} members", c.task_ids.len())));
            }
            for t in &c.task_ids {
                if !seen.insert(t.as_str()) {
                    return Err(invalid(&c.cluster_id, format!("task {t} assigned twice")));
                }
            }
        }
        let batch_set: HashSet<&str> = batch.iter().map(String::as_str).collect();
        if seen != batch_set {
            return Err(invalid("*", "cluster members do not match the batch".into()));
        }
        Ok(())
    }
}

/// Aggregated statistics for one dataset in an [`EvalReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub mean_reward: f64,
    pub n_examples: usize,
    pub n_repetitions: u32,
    /// Population standard deviation of the per-repetition means.
    pub repetition_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub prompt_id: String,
    pub per_dataset: std::collections::BTreeMap<String, DatasetStats>,
    pub macro_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_prompt_id: Option<String>,
    #[serde(default)]
    pub excluded_datasets: Vec<String>,
    pub usage: UsageCounters,
}

impl EvalReport {
    pub fn means(&self) -> std::collections::BTreeMap<String, f64> {
        self.per_dataset
            .iter()
            .map(|(k, v)| (k.clone(), v.mean_reward))
            .collect()
    }
}

/// Call accounting for a run.
///
/// `optimization_llm_calls` counts optimizer-role completions and
/// `evaluation_calls` counts generator completions (target queries answered).
/// Extraction and judge completions are tracked separately so the four
/// counters sum to every completion issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UsageCounters {
    pub optimization_llm_calls: u64,
    pub evaluation_calls: u64,
    #[serde(default)]
    pub extraction_calls: u64,
    #[serde(default)]
    pub judge_calls: u64,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

impl UsageCounters {
    pub fn total_completions(&self) -> u64 {
        self.optimization_llm_calls + self.evaluation_calls + self.extraction_calls + self.judge_calls
    }

    /// Counter differences `self - earlier`, saturating at zero.
    pub fn since(&self, earlier: &UsageCounters) -> UsageCounters {
        UsageCounters {
            optimization_llm_calls: self.optimization_llm_calls.saturating_sub(earlier.optimization_llm_calls),
            evaluation_calls: self.evaluation_calls.saturating_sub(earlier.evaluation_calls),
            extraction_calls: self.extraction_calls.saturating_sub(earlier.extraction_calls),
            judge_calls: self.judge_calls.saturating_sub(earlier.judge_calls),
            wall_time: self.wall_time.saturating_sub(earlier.wall_time),
        }
    }
}

/// Completion counts without wall time, so lineage files are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CallCounts {
    pub optimization_llm_calls: u64,
    pub evaluation_calls: u64,
    pub extraction_calls: u64,
    pub judge_calls: u64,
}

impl From<UsageCounters> for CallCounts {
    fn from(u: UsageCounters) -> Self {
        CallCounts {
            optimization_llm_calls: u.optimization_llm_calls,
            evaluation_calls: u.evaluation_calls,
            extraction_calls: u.extraction_calls,
            judge_calls: u.judge_calls,
        }
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(task_id: &str, dataset_id: &str) -> Example {
        Example {
            task_id: task_id.into(),
            dataset_id: dataset_id.into(),
            category: None,
            source_conversation: Conversation::from_pairs([(Role::User, "hi")]).unwrap(),
            target_query: "q".into(),
            reward_spec: RewardSpec::ExactMatch { gold: "a".into(), aliases: vec![] },
        }
    }

    #[test]
    fn distinct_ids_validate() {
        let corpus = validate_corpus(vec![example("0001", "A"), example("0002", "A")]).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.examples()[0].task_id, "0001");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = validate_corpus(vec![example("0001", "A"), example("0001", "B")]).unwrap_err();
        assert_eq!(err, DomainError::DuplicateTaskId("0001".into()));
    }

    #[test]
    fn empty_dataset_id_rejected() {
        let err = validate_corpus(vec![example("0001", "")]).unwrap_err();
        assert!(matches!(err, DomainError::InvalidExample { ref task_id, .. } if task_id == "0001"));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert_eq!(validate_corpus(vec![]).unwrap_err(), DomainError::EmptyCorpus);
    }

    #[test]
    fn blank_message_rejected() {
        assert_eq!(Message::user("  \n ").unwrap_err(), DomainError::EmptyMessage);
        let err = serde_json::from_str::<Message>(r#"{"role":"user","content":" "}"#).unwrap_err();
        assert!(err.to_string().contains("empty"));
    }

    #[test]
    fn unknown_role_rejected() {
        assert!(serde_json::from_str::<Message>(r#"{"role":"robot","content":"x"}"#).is_err());
    }

    #[test]
    fn empty_conversation_rejected() {
        assert!(serde_json::from_str::<Conversation>("[]").is_err());
    }

    #[test]
    fn reward_bounds() {
        assert!(Reward::new(1.0).is_ok());
        assert!(Reward::new(0.0).is_ok());
        assert!(Reward::new(1.0000001).is_err());
        assert!(Reward::new(-0.1).is_err());
        assert!(Reward::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Reward>("1.5").is_err());
    }

    #[test]
    fn prompt_parent_rules() {
        assert!(PromptCandidate::seed("s", "text").is_ok());
        assert!(PromptCandidate::seed("s", "   ").is_err());
        assert!(PromptCandidate::proposed("c", "s", "text", 1, None).is_ok());
        let bad = r#"{"prompt_id":"c","parent_id":null,"text":"t","provenance":"proposed","round":1,"rationale":null}"#;
        assert!(serde_json::from_str::<PromptCandidate>(bad).is_err());
    }

    #[test]
    fn memory_set_items_come_from_raw() {
        let m = MemorySet::from_raw("1. a\n2. b");
        assert_eq!(m.items(), ["a", "b"]);
        assert!(MemorySet::from_items(vec!["".into()]).is_err());
        let m = MemorySet::from_items(vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(MemorySet::from_raw(m.raw_text()).items(), m.items());
    }

    #[test]
    fn partition_check() {
        let pool = ClusterPool {
            clusters: vec![
                Cluster {
                    cluster_id: "cluster_01".into(),
                    label: "a".into(),
                    description: "d".into(),
                    task_ids: ["1", "2"].iter().map(|s| s.to_string()).collect(),
                },
                Cluster {
                    cluster_id: "cluster_02".into(),
                    label: "b".into(),
                    description: "d".into(),
                    task_ids: ["3", "4"].iter().map(|s| s.to_string()).collect(),
                },
            ],
            round_updated: 1,
        };
        let batch: Vec<String> = ["1", "2", "3", "4"].iter().map(|s| s.to_string()).collect();
        pool.check_partition(&batch, 7, 2).unwrap();
        assert!(pool.check_partition(&batch[..3], 7, 2).is_err());
        assert!(pool.check_partition(&batch, 1, 2).is_err());
        assert!(pool.check_partition(&batch, 7, 3).is_err());
    }
}
