//! Scores the five built-in extraction prompts, a more thorough hand-written
//! prompt and the memory-free baseline on
//! the toy corpus, then prints the category table with relative gain against
//! the baseline.
//!
//! cargo run --example evaluate_static

#[path = "common/toy.rs"]
mod toy;

use clue::assets;
use clue::domain::PromptCandidate;
use clue::harness::{attach_relative_gain, render_table};
use clue::runner::{no_memory_prompt, RepetitionPolicy, Runner};

fn main() {
    let examples = toy::corpus();
    let runner = Runner::new(toy::gateway(toy::world())).with_max_in_flight(4);
    let policy = RepetitionPolicy::default();

    let base = runner
        .evaluate_prompt(&no_memory_prompt(), &examples, policy, 0, None)
        .expect("no log store, no I/O")
        .report;
    println!("{}", render_table(&base, None));

    let evolved = [("evolved", toy::EVOLVED_PROMPT)];
    for (id, text) in assets::STATIC_PROMPTS.into_iter().chain(evolved) {
        let prompt = PromptCandidate::seed(id, text).unwrap();
        let mut report = runner.evaluate_prompt(&prompt, &examples, policy, 0, None).unwrap().report;
        match attach_relative_gain(&mut report, &base) {
            Ok(()) => println!("{}", render_table(&report, Some(&base))),
            Err(e) => println!("{id}: macro accuracy {:.2}% ({e})\n", 100.0 * report.macro_accuracy),
        }
    }
    let usage = runner.gateway().usage();
    println!(
        "completions: {} extraction, {} evaluation, {} judge",
        usage.extraction_calls, usage.evaluation_calls, usage.judge_calls
    );
}
