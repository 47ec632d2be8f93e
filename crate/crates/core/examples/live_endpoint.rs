//! Evaluates the Simple prompt against a real OpenAI-compatible endpoint.
//! Skips unless CLUE_BASE_URL and CLUE_MODEL are set; the key is read from
//! CLUE_API_KEY. Pass a corpus path as the first argument (default: the toy
//! corpus).
//!
//! CLUE_BASE_URL=http://localhost:8000/v1 CLUE_MODEL=qwen cargo run --example live_endpoint

#[path = "common/toy.rs"]
mod toy;

use std::path::PathBuf;
use std::sync::Arc;

use clue::assets;
use clue::domain::PromptCandidate;
use clue::gateway::{Gateway, OpenAiCompatBackend};
use clue::harness::{load_corpus, render_table, API_KEY_ENV};
use clue::runner::{RepetitionPolicy, Runner};

fn main() {
    let (Ok(url), Ok(model)) = (std::env::var("CLUE_BASE_URL"), std::env::var("CLUE_MODEL")) else {
        println!("CLUE_BASE_URL / CLUE_MODEL not set; skipping");
        return;
    };
    let corpus = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| toy::data_dir().join("toy_corpus.jsonl"));
    let examples = load_corpus(&corpus).expect("corpus loads").into_examples();
    let key = std::env::var(API_KEY_ENV).ok();
    let gateway = Gateway::builder()
        .route_all(Arc::new(OpenAiCompatBackend::new(url, model, key)))
        .build();
    let runner = Runner::new(Arc::new(gateway)).with_max_in_flight(8);
    let prompt = PromptCandidate::seed("simple", assets::SIMPLE).unwrap();
    let report = runner
        .evaluate_prompt(&prompt, &examples, RepetitionPolicy::Fixed(1), 0, None)
        .unwrap()
        .report;
    println!("{}", render_table(&report, None));
}
