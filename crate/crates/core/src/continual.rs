//! Streaming retrieve, answer, extract, append.
//!
//! Examples are processed strictly in order. For each one the target query is
//! embedded, the top-k stored memories are retrieved and concatenated into the
//! generation template, the answer is scored, and the completed target
//! conversation (which contains the injected memory block) is the source for
//! a new extraction whose items are appended to the store.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assets;
use crate::domain::{render_numbered, CallCounts, Example, PromptCandidate};
use crate::gateway::{cosine, GatewayError};
use crate::metrics;
use crate::runner::Runner;

#[derive(Debug, Error)]
pub enum ContinualError {
    #[error("the stream is empty")]
    EmptyStream,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("no embedding model is configured")]
    EmbeddingUnavailable,
    #[error("embedding has dimension {got}; the store holds dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("memory journal {path}: {source}")]
    Journal {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed journal line {line} in {path}: {source}")]
    JournalLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub text: String,
    pub embedding: Vec<f64>,
    pub origin_task_id: String,
    pub seq: u64,
}

/// Append-only memory store, optionally mirrored to a JSONL journal.
#[derive(Debug, Default)]
pub struct MemoryStore {
    entries: Vec<MemoryEntry>,
    journal: Option<(PathBuf, File)>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty store that writes every append to a fresh journal at `path`.
    pub fn with_journal(path: impl Into<PathBuf>) -> Result<Self, ContinualError> {
        let path = path.into();
        let err = |source| ContinualError::Journal {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(err)?;
        }
        let file = File::create(&path).map_err(err)?;
        Ok(MemoryStore {
            entries: Vec::new(),
            journal: Some((path, file)),
        })
    }

    /// Replays a journal written by a previous run.
    pub fn load_journal(path: &Path) -> Result<Self, ContinualError> {
        let file = File::open(path).map_err(|source| ContinualError::Journal {
            path: path.to_path_buf(),
            source,
        })?;
        let mut store = MemoryStore::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| ContinualError::Journal {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let e: MemoryEntry = serde_json::from_str(&line).map_err(|source| ContinualError::JournalLine {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
            store.push(e)?;
        }
        Ok(store)
    }

    fn push(&mut self, entry: MemoryEntry) -> Result<(), ContinualError> {
        if let Some(first) = self.entries.first() {
            if first.embedding.len() != entry.embedding.len() {
                return Err(ContinualError::DimensionMismatch {
                    expected: first.embedding.len(),
                    got: entry.embedding.len(),
                });
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn append(
        &mut self,
        text: impl Into<String>,
        embedding: Vec<f64>,
        origin_task_id: impl Into<String>,
    ) -> Result<&MemoryEntry, ContinualError> {
        let entry = MemoryEntry {
            text: text.into(),
            embedding,
            origin_task_id: origin_task_id.into(),
            seq: self.entries.len() as u64,
        };
        self.push(entry)?;
        let entry = self.entries.last().expect("just pushed");
        if let Some((path, file)) = &mut self.journal {
            let line = serde_json::to_string(entry).expect("entries serialize");
            writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|source| ContinualError::Journal {
                    path: path.clone(),
                    source,
                })?;
        }
        Ok(entry)
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Top-k entries by cosine similarity, ties to the lower sequence index.
pub fn retrieve_top_k<'a>(store: &'a MemoryStore, query: &[f64], k: usize) -> Vec<(&'a MemoryEntry, f64)> {
    let mut scored: Vec<(&MemoryEntry, f64)> = store.entries().iter().map(|e| (e, cosine(query, &e.embedding))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.seq.cmp(&b.0.seq)));
    scored.truncate(k);
    scored
}

/// Retrieved texts as a numbered list in retrieval order, or the no-memory
/// sentinel. The result fills the generation template's memory block.
pub fn consolidate(entries: &[&MemoryEntry]) -> String {
    if entries.is_empty() {
        return assets::NO_MEMORY_SENTINEL.to_string();
    }
    render_numbered(&entries.iter().map(|e| e.text.clone()).collect::<Vec<_>>())
}

/// SHA-256 over the task ids in stream order, newline separated.
pub fn stream_order_hash(stream: &[Example]) -> String {
    let mut h = Sha256::new();
    for e in stream {
        h.update(e.task_id.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieved {
    pub seq: u64,
    pub origin_task_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamStep {
    pub position: usize,
    pub task_id: String,
    pub dataset_id: String,
    pub retrieved: Vec<Retrieved>,
    pub reward: f64,
    /// Sequence indices of entries appended from this example.
    pub appended: Vec<u64>,
    pub store_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinualReport {
    pub prompt_id: String,
    pub k: usize,
    pub per_dataset: BTreeMap<String, f64>,
    pub macro_accuracy: f64,
    pub mean_reward: f64,
    /// Store size after each example.
    pub store_growth: Vec<usize>,
    pub stream_order_hash: String,
    pub trace: Vec<StreamStep>,
    pub calls: CallCounts,
}

/// Processes `stream` in order. Per-example failures score 0 (answer
/// failures) or skip the store append (extraction or embedding failures);
/// the stream always continues.
pub fn run_stream(
    runner: &Runner,
    prompt: &PromptCandidate,
    stream: &[Example],
    k: usize,
    store: &mut MemoryStore,
) -> Result<ContinualReport, ContinualError> {
    if stream.is_empty() {
        return Err(ContinualError::EmptyStream);
    }
    if k == 0 {
        return Err(ContinualError::InvalidK);
    }
    let gw = runner.gateway();
    if gw.embedding_dimension().is_none() {
        return Err(ContinualError::EmbeddingUnavailable);
    }
    let before = gw.usage();
    let mut trace = Vec::with_capacity(stream.len());
    for (position, ex) in stream.iter().enumerate() {
        let mut step = StreamStep {
            position,
            task_id: ex.task_id.clone(),
            dataset_id: ex.dataset_id.clone(),
            retrieved: Vec::new(),
            reward: 0.0,
            appended: Vec::new(),
            store_size: store.len(),
            diagnostic: None,
        };
        let query = match gw.embed(&ex.target_query) {
            Ok(v) => v,
            Err(e) => {
                step.diagnostic = Some(format!("query embedding failed: {e}"));
                trace.push(step);
                continue;
            }
        };
        let hits = retrieve_top_k(store, &query, k);
        step.retrieved = hits
            .iter()
            .map(|(e, s)| Retrieved {
                seq: e.seq,
                origin_task_id: e.origin_task_id.clone(),
                similarity: *s,
            })
            .collect();
        let block = consolidate(&hits.iter().map(|(e, _)| *e).collect::<Vec<_>>());
        let (response, target) = match runner.answer(&ex.target_query, Some(&block)) {
            Ok(r) => r,
            Err(e) => {
                step.diagnostic = Some(format!("generation failed: {e}"));
                trace.push(step);
                continue;
            }
        };
        match runner.scorer().score(&ex.reward_spec, &response, ex) {
            Ok(s) => {
                step.reward = s.reward.value();
                step.diagnostic = s.diagnostic;
            }
            Err(e) => step.diagnostic = Some(format!("scoring failed: {e}")),
        }
        let memory = match runner.extract_memory_from(prompt, &target) {
            Ok(m) => m,
            Err(e) => {
                step.diagnostic = Some(format!("extraction failed: {e}"));
                trace.push(step);
                continue;
            }
        };
        let embedded: Result<Vec<(String, Vec<f64>)>, GatewayError> = memory
            .items()
            .iter()
            .map(|item| gw.embed(item).map(|v| (item.clone(), v)))
            .collect();
        match embedded {
            Ok(items) => {
                for (text, v) in items {
                    step.appended.push(store.append(text, v, &ex.task_id)?.seq);
                }
            }
            Err(e) => step.diagnostic = Some(format!("memory embedding failed: {e}")),
        }
        step.store_size = store.len();
        trace.push(step);
    }

    let mut by_dataset: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in &trace {
        by_dataset.entry(s.dataset_id.clone()).or_default().push(s.reward);
    }
    let per_dataset: BTreeMap<String, f64> = by_dataset
        .iter()
        .map(|(k, v)| (k.clone(), metrics::dataset_mean(v).expect("non-empty")))
        .collect();
    let all: Vec<f64> = trace.iter().map(|s| s.reward).collect();
    Ok(ContinualReport {
        prompt_id: prompt.prompt_id().to_string(),
        k,
        macro_accuracy: metrics::macro_accuracy(&per_dataset).expect("non-empty stream"),
        mean_reward: metrics::dataset_mean(&all).expect("non-empty stream"),
        per_dataset,
        store_growth: trace.iter().map(|s| s.store_size).collect(),
        stream_order_hash: stream_order_hash(stream),
        trace,
        calls: gw.usage().since(&before).into(),
    })
}
