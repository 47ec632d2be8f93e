//! Utility-driven evaluation and cluster-guided evolution of memory-extraction
//! prompts.
//!
//! A prompt is judged by what it enables: the extraction model turns a source
//! conversation into memories, a generation model answers a paired target
//! query with those memories, and the answer is scored. [`evolve`] improves a
//! prompt by summarizing and clustering recent extraction attempts, analyzing
//! each cluster with log-reading tools, proposing rewrites, and running a
//! tournament. [`continual`] runs the same extraction inside a streaming
//! retrieve/answer/extract loop.
//!
//! Every model call goes through [`gateway::Gateway`], which also offers a
//! deterministic [`gateway::ScriptedBackend`] for offline runs.

pub mod assets;
pub mod continual;
pub mod domain;
pub mod evolve;
pub mod gateway;
pub mod harness;
pub mod json_extract;
pub mod metrics;
pub mod parallel;
pub mod reward;
pub mod runner;
