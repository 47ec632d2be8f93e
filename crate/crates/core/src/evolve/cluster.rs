//! Parsing, validation and deterministic repair of cluster-manager replies.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde_json::Value;

use crate::domain::{Cluster, ClusterPool};
use crate::json_extract::json_values;

/// One cluster as the manager returned it, before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProposedCluster {
    pub cluster_id: Option<String>,
    pub label: String,
    pub description: String,
    pub task_ids: Vec<String>,
}

fn id_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_cluster(v: &Value) -> Result<ProposedCluster, String> {
    let obj = v.as_object().ok_or("cluster entry is not an object")?;
    let ids = obj
        .get("example_task_ids")
        .or_else(|| obj.get("task_ids"))
        .and_then(Value::as_array)
        .ok_or("cluster entry has no example_task_ids array")?;
    let text = |k: &str| obj.get(k).and_then(Value::as_str).unwrap_or_default().trim().to_string();
    Ok(ProposedCluster {
        cluster_id: obj.get("cluster_id").and_then(id_text).filter(|s| !s.is_empty()),
        label: text("label"),
        description: text("description"),
        task_ids: ids.iter().filter_map(id_text).collect(),
    })
}

/// Reads the first JSON value that carries a cluster list: an object with a
/// `clusters` array, or a non-empty bare array of objects. Fences and prose
/// are ignored.
pub fn parse_cluster_reply(text: &str) -> Result<Vec<ProposedCluster>, String> {
    for v in json_values(text) {
        let list = match &v {
            Value::Object(o) => match o.get("clusters") {
                Some(Value::Array(a)) => a,
                _ => continue,
            },
            // A bare array only counts when it looks like a cluster list;
            // id arrays inside a broken object must not pass as one.
            Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_object) => a,
            _ => continue,
        };
        return list.iter().map(parse_cluster).collect();
    }
    Err("no JSON object with a \"clusters\" array found".into())
}

/// Every constraint the reply breaks; empty when it is a valid partition.
pub fn violations(clusters: &[ProposedCluster], batch: &[String], max_clusters: usize, min_size: usize) -> Vec<String> {
    let mut out = Vec::new();
    let batch_set: HashSet<&str> = batch.iter().map(String::as_str).collect();
    let min_eff = min_size.min(batch.len());
    if clusters.is_empty() {
        out.push("no clusters were returned".to_string());
    }
    if clusters.len() > max_clusters {
        out.push(format!("{} clusters exceed the maximum of {max_clusters}", clusters.len()));
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, c) in clusters.iter().enumerate() {
        let name = c.cluster_id.clone().unwrap_or_else(|| format!("#{}", i + 1));
        if c.label.is_empty() {
            out.push(format!("cluster {name} has no label"));
        }
        if c.task_ids.len() < min_eff {
            out.push(format!("cluster {name} has {} examples; at least {min_eff} required", c.task_ids.len()));
        }
        for t in &c.task_ids {
            if !batch_set.contains(t.as_str()) {
                out.push(format!("task id {t} is not in the current batch"));
            } else if !seen.insert(t) {
                out.push(format!("task id {t} is assigned more than once"));
            }
        }
    }
    for t in batch {
        if !seen.contains(t.as_str()) {
            out.push(format!("task id {t} is not assigned to any cluster"));
        }
    }
    out
}

fn tokens(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().count() >= 3)
        .map(str::to_lowercase)
        .collect()
}

/// Turns any parsed reply into a valid partition of `batch`.
///
/// 1. unknown ids are dropped and the first assignment of a duplicate wins;
/// 2. empty clusters are dropped and unassigned ids join the largest cluster
///    (earliest on ties);
/// 3. while there are too many clusters or an undersized one, the smallest
///    cluster (last on ties) merges into the cluster whose label and
///    description share the most tokens with the small cluster's summaries
///    (larger, then earlier, on ties).
pub fn repair(
    clusters: Vec<ProposedCluster>,
    batch: &[String],
    summaries: &HashMap<String, String>,
    max_clusters: usize,
    min_size: usize,
) -> Vec<ProposedCluster> {
    let batch_set: HashSet<&str> = batch.iter().map(String::as_str).collect();
    let mut assigned: HashSet<String> = HashSet::new();
    let mut out: Vec<ProposedCluster> = clusters
        .into_iter()
        .map(|mut c| {
            c.task_ids.retain(|t| batch_set.contains(t.as_str()) && assigned.insert(t.clone()));
            if c.label.is_empty() {
                c.label = "Unlabeled extraction scenario".to_string();
            }
            c
        })
        .filter(|c| !c.task_ids.is_empty())
        .collect();
    let unassigned: Vec<String> = batch.iter().filter(|t| !assigned.contains(*t)).cloned().collect();
    if out.is_empty() {
        if batch.is_empty() {
            return out;
        }
        out.push(ProposedCluster {
            cluster_id: None,
            label: "Unlabeled extraction scenario".into(),
            description: String::new(),
            task_ids: Vec::new(),
        });
    }
    if !unassigned.is_empty() {
        let largest = (0..out.len())
            .max_by_key(|&i| (out[i].task_ids.len(), std::cmp::Reverse(i)))
            .expect("non-empty");
        out[largest].task_ids.extend(unassigned);
    }
    let min_eff = min_size.min(batch.len());
    while out.len() > 1 && (out.len() > max_clusters.max(1) || out.iter().any(|c| c.task_ids.len() < min_eff)) {
        let smallest = (0..out.len())
            .min_by_key(|&i| (out[i].task_ids.len(), std::cmp::Reverse(i)))
            .expect("non-empty");
        let small = out.remove(smallest);
        let small_tokens: HashSet<String> = small
            .task_ids
            .iter()
            .filter_map(|t| summaries.get(t))
            .flat_map(|s| tokens(s))
            .collect();
        let target = (0..out.len())
            .max_by_key(|&i| {
                let overlap = tokens(&format!("{} {}", out[i].label, out[i].description))
                    .intersection(&small_tokens)
                    .count();
                (overlap, out[i].task_ids.len(), std::cmp::Reverse(i))
            })
            .expect("at least one other cluster");
        out[target].task_ids.extend(small.task_ids);
    }
    out
}

/// One cluster holding the whole batch, used when no reply could be parsed.
pub fn single_cluster(batch: &[String]) -> Vec<ProposedCluster> {
    vec![ProposedCluster {
        cluster_id: None,
        label: "Mixed extraction scenarios".into(),
        description: "Fallback cluster covering the whole batch because no clustering could be parsed.".into(),
        task_ids: batch.to_vec(),
    }]
}

/// Gives every cluster a stable id: ids already in `pool` are kept (first
/// use only); anything else receives the next `cluster_NN`.
pub fn assign_ids(clusters: Vec<ProposedCluster>, pool: &ClusterPool, next_id: &mut u32, round: u32) -> ClusterPool {
    let known: HashSet<&str> = pool.clusters.iter().map(|c| c.cluster_id.as_str()).collect();
    let mut used: HashSet<String> = HashSet::new();
    let clusters = clusters
        .into_iter()
        .map(|c| {
            let id = match c.cluster_id {
                Some(id) if known.contains(id.as_str()) && !used.contains(&id) => id,
                _ => {
                    let id = format!("cluster_{:02}", *next_id);
                    *next_id += 1;
                    id
                }
            };
            used.insert(id.clone());
            Cluster {
                cluster_id: id,
                label: c.label,
                description: c.description,
                task_ids: c.task_ids.into_iter().collect::<BTreeSet<_>>(),
            }
        })
        .collect();
    ClusterPool {
        clusters,
        round_updated: round,
    }
}

/// The manager prompt's existing-pool block; empty for an empty pool.
pub fn render_pool_section(pool: &ClusterPool) -> String {
    if pool.is_empty() {
        return String::new();
    }
    let lines: Vec<String> = pool
        .clusters
        .iter()
        .map(|c| format!("[{}] {} -- {}", c.cluster_id, c.label, c.description))
        .collect();
    format!(
        "Existing clusters from previous rounds:\n<existing_clusters>\n{}\n</existing_clusters>",
        lines.join("\n")
    )
}

/// Batch block: one `[task_id] summary` line per example.
pub fn render_batch_summaries(summaries: &[(String, String)]) -> String {
    summaries
        .iter()
        .map(|(id, s)| format!("[{id}] {s}"))
        .collect::<Vec<_>>()
        .join("\n")
}
