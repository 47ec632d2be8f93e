//! Corpus ingestion, split manifests, run configuration and the command
//! functions behind the `clue` binary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assets;
use crate::continual::{self, ContinualError, ContinualReport, MemoryStore};
use crate::domain::{validate_corpus, Category, Corpus, DomainError, EvalReport, Example, PromptCandidate};
use crate::evolve::{Clue, EvolutionConfig, EvolutionResult, EvolveError};
use crate::gateway::{
    DecodeParams, Embedder, Gateway, HashEmbedder, HttpEmbedder, MockScript, OpenAiCompatBackend, RetryPolicy,
    RoleTag, ScriptedBackend,
};
use crate::metrics::{self, MetricsError};
use crate::runner::{no_memory_prompt, LogStore, RepetitionPolicy, Runner, StoreError};

/// Environment variable holding the endpoint API key.
pub const API_KEY_ENV: &str = "CLUE_API_KEY";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("dataset {dataset_id} has {size} examples; more than {train_n} are needed to leave a test split")]
    DatasetTooSmall {
        dataset_id: String,
        size: usize,
        train_n: usize,
    },
    #[error("invalid split settings: {0}")]
    InvalidSplit(String),
    #[error("manifest not found: {0}")]
    ManifestNotFound(PathBuf),
    #[error("manifest {manifest} names task {task_id:?}, which is not in its corpus")]
    UnknownTaskId { manifest: PathBuf, task_id: String },
    #[error("manifest {0} lists no tasks")]
    EmptyManifest(PathBuf),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("relative gain requested without a base report (pass --base)")]
    MissingBaseReport,
    #[error("prompt {0:?} is neither a built-in prompt id nor a readable file")]
    PromptNotFound(String),
    #[error("{0}: not an evaluation or continual report")]
    UnknownReport(PathBuf),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Continual(#[from] ContinualError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

// ---------------------------------------------------------------- corpus

/// Reads a JSONL corpus, one example per line. Blank lines are skipped.
pub fn load_corpus(path: &Path) -> Result<Corpus, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse = |reason: String| HarnessError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let example: Example = serde_json::from_str(line).map_err(|e| parse(e.to_string()))?;
        example.validate().map_err(|e| parse(e.to_string()))?;
        examples.push(example);
    }
    Ok(validate_corpus(examples)?)
}

pub fn save_corpus(path: &Path, examples: &[Example]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for e in examples {
        out.push_str(&serde_json::to_string(e).expect("examples serialize"));
        out.push('\n');
    }
    write_text(path, &out)
}

// ---------------------------------------------------------------- splits

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Training examples per dataset.
    pub train_n: usize,
    /// Per-dataset replacements for `train_n`.
    pub train_n_overrides: BTreeMap<String, usize>,
    /// Maximum test examples per dataset.
    pub test_cap: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_n: 20,
            train_n_overrides: BTreeMap::new(),
            test_cap: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    Test,
}

/// A reproducible selection of task ids from a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Corpus path. Relative paths resolve against the manifest's directory
    /// first, then the working directory.
    pub corpus: PathBuf,
    pub split: SplitKind,
    pub seed: u64,
    pub task_ids: Vec<String>,
}

fn dataset_rng(seed: u64, dataset_id: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(dataset_id.as_bytes());
    let mut salt = [0u8; 8];
    salt.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(seed ^ u64::from_le_bytes(salt))
}

/// Per-dataset train/test split.
///
/// Each dataset is shuffled with a generator derived from the seed and the
/// dataset id, so adding a dataset does not disturb the others. Manifests list
/// ids in corpus order.
pub fn split_corpus(corpus: &Corpus, corpus_path: &Path, cfg: &SplitConfig) -> Result<(Manifest, Manifest), HarnessError> {
    if cfg.test_cap == 0 {
        return Err(HarnessError::InvalidSplit("test_cap must be positive".into()));
    }
    let mut by_dataset: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in corpus.examples() {
        by_dataset.entry(&e.dataset_id).or_default().push(&e.task_id);
    }
    for name in cfg.train_n_overrides.keys() {
        if !by_dataset.contains_key(name.as_str()) {
            log::warn!("train_n override for unknown dataset {name}");
        }
    }
    let mut train = BTreeSet::new();
    let mut test = BTreeSet::new();
    for (dataset, ids) in &by_dataset {
        let train_n = cfg.train_n_overrides.get(*dataset).copied().unwrap_or(cfg.train_n);
        if ids.len() <= train_n {
            return Err(HarnessError::DatasetTooSmall {
                dataset_id: dataset.to_string(),
                size: ids.len(),
                train_n,
            });
        }
        let mut shuffled = ids.clone();
        shuffled.shuffle(&mut dataset_rng(cfg.seed, dataset));
        train.extend(shuffled[..train_n].iter().copied());
        test.extend(shuffled[train_n..].iter().take(cfg.test_cap).copied());
    }
    let pick = |set: &BTreeSet<&str>, split| Manifest {
        corpus: corpus_path.to_path_buf(),
        split,
        seed: cfg.seed,
        task_ids: corpus
            .examples()
            .iter()
            .filter(|e| set.contains(e.task_id.as_str()))
            .map(|e| e.task_id.clone())
            .collect(),
    };
    Ok((pick(&train, SplitKind::Train), pick(&test, SplitKind::Test)))
}

pub fn load_manifest(path: &Path) -> Result<Manifest, HarnessError> {
    if !path.is_file() {
        return Err(HarnessError::ManifestNotFound(path.to_path_buf()));
    }
    read_json(path)
}

/// Loads a manifest and its corpus and returns the listed examples in
/// manifest order.
pub fn manifest_examples(path: &Path) -> Result<Vec<Example>, HarnessError> {
    let manifest = load_manifest(path)?;
    if manifest.task_ids.is_empty() {
        return Err(HarnessError::EmptyManifest(path.to_path_buf()));
    }
    let corpus_path = if manifest.corpus.is_relative() {
        let beside = path.parent().unwrap_or(Path::new("")).join(&manifest.corpus);
        if beside.is_file() {
            beside
        } else {
            manifest.corpus.clone()
        }
    } else {
        manifest.corpus.clone()
    };
    let corpus = load_corpus(&corpus_path)?;
    manifest
        .task_ids
        .iter()
        .map(|id| {
            corpus.get(id).cloned().ok_or_else(|| HarnessError::UnknownTaskId {
                manifest: path.to_path_buf(),
                task_id: id.clone(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    600
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    /// Local character-trigram hashing; no network.
    Hash { dimension: usize },
    Http {
        base_url: String,
        model: String,
        dimension: usize,
    },
}

impl EmbeddingConfig {
    pub fn dimension(&self) -> usize {
        match *self {
            EmbeddingConfig::Hash { dimension } | EmbeddingConfig::Http { dimension, .. } => dimension,
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Hash { dimension: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub repetitions: RepetitionPolicy,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            repetitions: RepetitionPolicy::default(),
        }
    }
}

/// Everything a run needs except the API key, which comes from
/// `CLUE_API_KEY`.
///
/// `endpoints` and `decode` are keyed by role name (`extractor`,
/// `generator`, `summarizer`, `cluster_manager`, `cluster_analyzer`,
/// `proposer`, `judge`) or `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub endpoints: BTreeMap<String, EndpointConfig>,
    pub decode: BTreeMap<String, DecodeParams>,
    pub embedding: EmbeddingConfig,
    pub evolution: EvolutionConfig,
    pub evaluation: EvaluationConfig,
    pub split: SplitConfig,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
    pub work_dir: PathBuf,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            endpoints: BTreeMap::new(),
            decode: BTreeMap::new(),
            embedding: EmbeddingConfig::default(),
            evolution: EvolutionConfig::default(),
            evaluation: EvaluationConfig::default(),
            split: SplitConfig::default(),
            retry: RetryPolicy::default(),
            max_in_flight: 8,
            work_dir: PathBuf::from("runs"),
        }
    }
}

fn parse_role(key: &str) -> Result<RoleTag, HarnessError> {
    serde_json::from_value(serde_json::Value::String(key.to_string()))
        .map_err(|_| HarnessError::Config(format!("unknown role {key:?}")))
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let config: HarnessConfig = read_json(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        for key in self.endpoints.keys().chain(self.decode.keys()) {
            if key != "default" {
                parse_role(key)?;
            }
        }
        for (key, d) in &self.decode {
            if !(d.temperature >= 0.0) || d.max_tokens == 0 {
                return Err(HarnessError::Config(format!("decode params for {key} are out of range")));
            }
        }
        if self.embedding.dimension() == 0 {
            return Err(HarnessError::Config("embedding dimension must be positive".into()));
        }
        self.evolution.validate()?;
        Ok(())
    }

    fn for_role<'a, T>(map: &'a BTreeMap<String, T>, role: RoleTag) -> Option<&'a T> {
        map.get(role.as_str()).or_else(|| map.get("default"))
    }
}

/// A configured gateway plus the settings commands share.
pub struct Harness {
    config: HarnessConfig,
    gateway: Arc<Gateway>,
    max_in_flight: usize,
}

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness")
            .field("gateway", &self.gateway)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

impl Harness {
    /// With a mock script every role is served by the scripted backend and
    /// embeddings are always local. A script that uses fallback queues is
    /// order dependent, so fan-out is forced to one.
    pub fn new(config: HarnessConfig, mock: Option<MockScript>) -> Result<Self, HarnessError> {
        config.validate()?;
        let mut builder = Gateway::builder().retry(config.retry);
        let mut max_in_flight = config.max_in_flight.max(1);
        for role in RoleTag::ALL {
            if let Some(d) = HarnessConfig::for_role(&config.decode, role) {
                builder = builder.decode(role, *d);
            }
        }
        let embedder: Arc<dyn Embedder>;
        match mock {
            Some(script) => {
                let backend = ScriptedBackend::from_script(script);
                if backend.uses_fallback() && max_in_flight > 1 {
                    log::info!("mock script uses fallback replies; running sequentially");
                    max_in_flight = 1;
                }
                builder = builder.route_all(Arc::new(backend));
                embedder = Arc::new(HashEmbedder::new(config.embedding.dimension()));
            }
            None => {
                if config.endpoints.is_empty() {
                    return Err(HarnessError::Config(
                        "no endpoints configured; pass --config with endpoints or --mock".into(),
                    ));
                }
                let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
                for role in RoleTag::ALL {
                    if let Some(ep) = HarnessConfig::for_role(&config.endpoints, role) {
                        builder = builder.route(
                            role,
                            Arc::new(OpenAiCompatBackend::with_timeout(
                                &ep.base_url,
                                &ep.model,
                                key.clone(),
                                Duration::from_secs(ep.timeout_secs),
                            )),
                        );
                    }
                }
                embedder = match &config.embedding {
                    EmbeddingConfig::Hash { dimension } => Arc::new(HashEmbedder::new(*dimension)),
                    EmbeddingConfig::Http {
                        base_url,
                        model,
                        dimension,
                    } => Arc::new(HttpEmbedder::new(base_url, model, key, *dimension)),
                };
            }
        }
        Ok(Harness {
            config,
            gateway: Arc::new(builder.embedder(embedder).build()),
            max_in_flight,
        })
    }

    /// Loads the optional config and mock script files.
    pub fn from_paths(config: Option<&Path>, mock: Option<&Path>) -> Result<Self, HarnessError> {
        let config = match config {
            Some(p) => HarnessConfig::load(p)?,
            None => HarnessConfig::default(),
        };
        let mock = mock
            .map(|p| MockScript::load(p).map_err(io_err(p)))
            .transpose()?;
        Harness::new(config, mock)
    }

    pub fn config(&self) -> &HarnessConfig {
        &self.config
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    pub fn runner(&self) -> Runner {
        Runner::new(self.gateway.clone()).with_max_in_flight(self.max_in_flight)
    }
}

/// A built-in prompt id, `no_memory`, or a path to a prompt file. File
/// prompts take the file stem as their id.
pub fn resolve_prompt(spec: &str) -> Result<PromptCandidate, HarnessError> {
    if spec == assets::NO_MEMORY_PROMPT_ID {
        return Ok(no_memory_prompt());
    }
    if let Some(text) = assets::static_prompt(spec) {
        return Ok(PromptCandidate::seed(spec.to_ascii_lowercase(), text)?);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(HarnessError::PromptNotFound(spec.to_string()));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    Ok(PromptCandidate::seed(id, text)?)
}

// ---------------------------------------------------------------- reports

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn signed_pct(x: f64) -> String {
    format!("{:+.2}%", 100.0 * x)
}

fn gain_cell(means: &BTreeMap<String, f64>, base: Option<&BTreeMap<String, f64>>) -> String {
    let Some(base) = base else {
        return String::new();
    };
    let base: BTreeMap<String, f64> = means.keys().filter_map(|k| base.get(k).map(|v| (k.clone(), *v))).collect();
    match metrics::relative_gain(means, &base) {
        Ok(g) => signed_pct(g.value),
        Err(_) => "n/a".into(),
    }
}

/// Human-readable table: datasets grouped by category with MA per dataset
/// and category, RG against `base` when given, then the overall row.
pub fn render_table(report: &EvalReport, base: Option<&EvalReport>) -> String {
    let base_means = base.map(EvalReport::means);
    let mut out = String::new();
    let base_id = report
        .base_prompt_id
        .as_deref()
        .or(base.map(|b| b.prompt_id.as_str()));
    match base_id {
        Some(b) => out.push_str(&format!("prompt: {}   base: {b}\n\n", report.prompt_id)),
        None => out.push_str(&format!("prompt: {}\n\n", report.prompt_id)),
    }
    out.push_str(&format!(
        "{:<28} {:>5} {:>5} {:>9} {:>8} {:>9}\n",
        "dataset", "n", "reps", "MA", "std", "RG"
    ));
    let mut groups: BTreeMap<Option<Category>, Vec<&String>> = BTreeMap::new();
    for (name, stats) in &report.per_dataset {
        groups.entry(stats.category).or_default().push(name);
    }
    for (category, names) in &groups {
        let label = category.map(Category::display_name).unwrap_or("Uncategorized");
        out.push_str(&format!("{label}\n"));
        let mut means = BTreeMap::new();
        for name in names {
            let s = &report.per_dataset[*name];
            means.insert((*name).clone(), s.mean_reward);
            let single: BTreeMap<String, f64> = [((*name).clone(), s.mean_reward)].into();
            out.push_str(&format!(
                "  {:<26} {:>5} {:>5} {:>9} {:>8} {:>9}\n",
                name,
                s.n_examples,
                s.n_repetitions,
                pct(s.mean_reward),
                pct(s.repetition_std),
                gain_cell(&single, base_means.as_ref())
            ));
        }
        out.push_str(&format!(
            "  {:<26} {:>5} {:>5} {:>9} {:>8} {:>9}\n",
            format!("{label} (MA)"),
            "",
            "",
            pct(metrics::macro_accuracy(&means).unwrap_or(0.0)),
            "",
            gain_cell(&means, base_means.as_ref())
        ));
    }
    let overall_rg = match (report.relative_gain, base_means.as_ref()) {
        (Some(g), _) => signed_pct(g),
        (None, b) => gain_cell(&report.means(), b),
    };
    out.push_str(&format!(
        "{:<28} {:>5} {:>5} {:>9} {:>8} {:>9}\n",
        format!("Overall ({} datasets)", report.per_dataset.len()),
        "",
        "",
        pct(report.macro_accuracy),
        "",
        overall_rg
    ));
    if !report.excluded_datasets.is_empty() {
        out.push_str(&format!(
            "excluded from RG (zero base mean): {}\n",
            report.excluded_datasets.join(", ")
        ));
    }
    out
}

pub fn render_continual_summary(report: &ContinualReport) -> String {
    let mut out = format!(
        "prompt: {}   k: {}   examples: {}   final store size: {}\n\n",
        report.prompt_id,
        report.k,
        report.trace.len(),
        report.store_growth.last().copied().unwrap_or(0)
    );
    out.push_str(&format!("{:<28} {:>9}\n", "dataset", "MA"));
    for (name, mean) in &report.per_dataset {
        out.push_str(&format!("  {:<26} {:>9}\n", name, pct(*mean)));
    }
    out.push_str(&format!("{:<28} {:>9}\n", "Overall", pct(report.macro_accuracy)));
    let failures = report.trace.iter().filter(|s| s.diagnostic.is_some()).count();
    if failures > 0 {
        out.push_str(&format!("{failures} steps carry diagnostics\n"));
    }
    out
}

/// Sets relative gain, the base id and the exclusion list from `base`.
pub fn attach_relative_gain(report: &mut EvalReport, base: &EvalReport) -> Result<(), HarnessError> {
    let gain = metrics::relative_gain(&report.means(), &base.means())?;
    report.relative_gain = Some(gain.value);
    report.base_prompt_id = Some(base.prompt_id.clone());
    report.excluded_datasets = gain.excluded;
    Ok(())
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Clone)]
pub struct EvaluateOutput {
    pub report: EvalReport,
    pub table: String,
    pub report_path: PathBuf,
}

/// Evaluates `prompt` on the test manifest and writes `report.json`,
/// `table.txt` and the pair logs under `out_dir`.
///
/// `require_gain` asks for relative gain; it needs `base`. A base report
/// alone also adds relative gain.
pub fn cmd_evaluate(
    harness: &Harness,
    prompt: &str,
    test_manifest: &Path,
    base: Option<&Path>,
    require_gain: bool,
    out_dir: &Path,
) -> Result<EvaluateOutput, HarnessError> {
    if require_gain && base.is_none() {
        return Err(HarnessError::MissingBaseReport);
    }
    let base: Option<EvalReport> = base.map(read_json).transpose()?;
    let prompt = resolve_prompt(prompt)?;
    let examples = manifest_examples(test_manifest)?;
    let logs_dir = out_dir.join("logs");
    reset_dir(&logs_dir)?;
    let store = LogStore::open(&logs_dir)?;
    let evaluation = harness.runner().evaluate_prompt(
        &prompt,
        &examples,
        harness.config.evaluation.repetitions,
        0,
        Some(&store),
    )?;
    let mut report = evaluation.report;
    if let Some(b) = &base {
        attach_relative_gain(&mut report, b)?;
    }
    let table = render_table(&report, base.as_ref());
    let report_path = out_dir.join("report.json");
    write_json(&report_path, &report)?;
    write_text(&out_dir.join("table.txt"), &table)?;
    Ok(EvaluateOutput {
        report,
        table,
        report_path,
    })
}

/// Removes a harness-owned output directory so reruns start clean.
fn reset_dir(dir: &Path) -> Result<(), HarnessError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(())
}

/// Evolves `seed_prompt` on the train manifest and writes
/// `winner_prompt.txt`, `lineage.json` and `usage.json` under `out_dir`.
pub fn cmd_evolve(
    harness: &Harness,
    seed_prompt: &str,
    train_manifest: &Path,
    out_dir: &Path,
) -> Result<EvolutionResult, HarnessError> {
    let seed = resolve_prompt(seed_prompt)?;
    let train = manifest_examples(train_manifest)?;
    let logs_dir = out_dir.join("logs");
    reset_dir(&logs_dir)?;
    let clue = Clue::new(harness.runner(), harness.config.evolution.clone(), &logs_dir)?;
    let result = clue.evolve_with_observer(&seed, &train, &mut |r| {
        log::info!(
            "round {} done: {} -> {} ({} optimization calls, {} evaluation calls)",
            r.round,
            r.incumbent_id,
            r.winner_id,
            r.calls.optimization_llm_calls,
            r.calls.evaluation_calls
        );
    })?;
    write_text(&out_dir.join("winner_prompt.txt"), result.best.text())?;
    write_json(&out_dir.join("lineage.json"), &result.lineage)?;
    write_json(&out_dir.join("usage.json"), &result.usage)?;
    Ok(result)
}

/// Runs the continual pipeline over the stream manifest in order and writes
/// `continual_report.json` and `memory_store.jsonl` under `out_dir`.
pub fn cmd_continual(
    harness: &Harness,
    prompt: &str,
    stream_manifest: &Path,
    k: usize,
    out_dir: &Path,
) -> Result<ContinualReport, HarnessError> {
    let prompt = resolve_prompt(prompt)?;
    let stream = manifest_examples(stream_manifest)?;
    let mut store = MemoryStore::with_journal(out_dir.join("memory_store.jsonl"))?;
    let report = continual::run_stream(&harness.runner(), &prompt, &stream, k, &mut store)?;
    write_json(&out_dir.join("continual_report.json"), &report)?;
    Ok(report)
}

/// Renders a saved evaluation or continual report.
pub fn cmd_report(path: &Path, base: Option<&Path>) -> Result<String, HarnessError> {
    let value: serde_json::Value = read_json(path)?;
    if let Ok(mut report) = serde_json::from_value::<EvalReport>(value.clone()) {
        let base: Option<EvalReport> = base.map(read_json).transpose()?;
        if let Some(b) = &base {
            attach_relative_gain(&mut report, b)?;
        }
        return Ok(render_table(&report, base.as_ref()));
    }
    if let Ok(report) = serde_json::from_value::<ContinualReport>(value) {
        return Ok(render_continual_summary(&report));
    }
    Err(HarnessError::UnknownReport(path.to_path_buf()))
}

/// Splits the corpus and writes `train.json` and `test.json` under `out_dir`.
pub fn cmd_split(corpus_path: &Path, cfg: &SplitConfig, out_dir: &Path) -> Result<(Manifest, Manifest), HarnessError> {
    let corpus = load_corpus(corpus_path)?;
    let corpus_ref = fs::canonicalize(corpus_path).map_err(io_err(corpus_path))?;
    let (train, test) = split_corpus(&corpus, &corpus_ref, cfg)?;
    write_json(&out_dir.join("train.json"), &train)?;
    write_json(&out_dir.join("test.json"), &test)?;
    Ok((train, test))
}

/// Writes a manifest for an explicit id list, e.g. a hand-ordered stream.
pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), HarnessError> {
    write_json(path, manifest)
}
