use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::PairLog;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("log store I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed log document {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("no log for task {task_id:?} (round {round}, prompt {prompt_id:?}, repetition {repetition})")]
    LogNotFound {
        task_id: String,
        round: u32,
        prompt_id: String,
        repetition: u32,
    },
}

/// Address of one pair log. Repetition is part of the key so repeated
/// evaluations of the same pair do not overwrite each other.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogKey {
    pub round: u32,
    pub prompt_id: String,
    pub task_id: String,
    #[serde(default)]
    pub repetition: u32,
}

impl LogKey {
    pub fn of(log: &PairLog) -> Self {
        LogKey {
            round: log.round,
            prompt_id: log.prompt_id.clone(),
            task_id: log.task_id.clone(),
            repetition: log.repetition,
        }
    }

    /// `round_R/prompt_P/task_T.json`, with `.rN` before the extension for
    /// repetitions after the first. Components are percent-encoded.
    pub fn relative_path(&self) -> PathBuf {
        let rep = if self.repetition == 0 {
            String::new()
        } else {
            format!(".r{}", self.repetition)
        };
        PathBuf::from(format!("round_{}", self.round))
            .join(format!("prompt_{}", encode(&self.prompt_id)))
            .join(format!("task_{}{rep}.json", encode(&self.task_id)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogFilter {
    pub round: Option<u32>,
    pub prompt_id: Option<String>,
    pub task_id: Option<String>,
}

impl LogFilter {
    fn matches(&self, k: &LogKey) -> bool {
        self.round.is_none_or(|r| r == k.round)
            && self.prompt_id.as_ref().is_none_or(|p| *p == k.prompt_id)
            && self.task_id.as_ref().is_none_or(|t| *t == k.task_id)
    }
}

fn encode(component: &str) -> String {
    let mut out = String::with_capacity(component.len());
    for b in component.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    #[serde(flatten)]
    key: LogKey,
    path: PathBuf,
}

/// One JSON document per pair log plus an `index.json`, both written
/// atomically (temporary file, then rename). Index updates are serialized.
#[derive(Debug)]
pub struct LogStore {
    root: PathBuf,
    index: Mutex<BTreeMap<LogKey, PathBuf>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = path.with_extension("json.tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl LogStore {
    /// Opens (or creates) a store, loading an existing index.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let index_path = root.join("index.json");
        let mut index = BTreeMap::new();
        if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(io_err(&index_path))?;
            let entries: Vec<IndexEntry> = serde_json::from_str(&text).map_err(|source| StoreError::Json {
                path: index_path.clone(),
                source,
            })?;
            index.extend(entries.into_iter().map(|e| (e.key, e.path)));
        }
        Ok(LogStore {
            root,
            index: Mutex::new(index),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn put(&self, log: &PairLog) -> Result<PathBuf, StoreError> {
        let key = LogKey::of(log);
        let rel = key.relative_path();
        let path = self.root.join(&rel);
        let bytes = serde_json::to_vec_pretty(log).expect("pair logs always serialize");
        write_atomic(&path, &bytes)?;
        let mut index = self.index.lock().expect("log index poisoned");
        index.insert(key, rel);
        let entries: Vec<IndexEntry> = index
            .iter()
            .map(|(k, p)| IndexEntry {
                key: k.clone(),
                path: p.clone(),
            })
            .collect();
        let bytes = serde_json::to_vec_pretty(&entries).expect("index always serializes");
        write_atomic(&self.root.join("index.json"), &bytes)?;
        Ok(path)
    }

    pub fn read(&self, key: &LogKey) -> Result<PairLog, StoreError> {
        let rel = self
            .index
            .lock()
            .expect("log index poisoned")
            .get(key)
            .cloned()
            .ok_or_else(|| StoreError::LogNotFound {
                task_id: key.task_id.clone(),
                round: key.round,
                prompt_id: key.prompt_id.clone(),
                repetition: key.repetition,
            })?;
        let path = self.root.join(rel);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| StoreError::Json { path, source })
    }

    /// The first-repetition log for a task.
    pub fn read_pair_log(&self, task_id: &str, round: u32, prompt_id: &str) -> Result<PairLog, StoreError> {
        self.read(&LogKey {
            round,
            prompt_id: prompt_id.to_string(),
            task_id: task_id.to_string(),
            repetition: 0,
        })
    }

    pub fn list_logs(&self, filter: &LogFilter) -> Vec<LogKey> {
        self.index
            .lock()
            .expect("log index poisoned")
            .keys()
            .filter(|k| filter.matches(k))
            .cloned()
            .collect()
    }
}
