//! Scores one response per built-in reward kind, plus a registered external
//! verifier and a scripted judge.
//!
//! cargo run --example reward_kinds

use std::sync::Arc;

use clue::domain::{Conversation, Example, Role};
use clue::gateway::{Gateway, RoleTag, ScriptedBackend};
use clue::reward::{extract_final_answer, RewardSpec, RuleExpr, Scorer};

fn example(spec: &RewardSpec) -> Example {
    Example::new(
        "t1",
        "demo",
        None,
        Conversation::from_pairs([(Role::User, "context")]).unwrap(),
        "What is the capital of France?",
        spec.clone(),
    )
    .unwrap()
}

fn main() {
    let judge = ScriptedBackend::new().default_reply(RoleTag::Judge, "<think>Paris is right.</think>\nyes");
    let gateway = Arc::new(Gateway::builder().route(RoleTag::Judge, Arc::new(judge)).build());
    let scorer = Scorer::new()
        .with_judge(gateway)
        .register("word_count", |input| {
            let want = input.params["max_words"].as_u64().unwrap_or(10) as usize;
            if input.response.split_whitespace().count() <= want { 1.0 } else { 0.0 }
        });

    let cases = [
        (
            RewardSpec::ExactMatch {
                gold: "Paris".into(),
                aliases: vec!["Paris, France".into()],
            },
            "Let me think.\n**Answer:** paris",
        ),
        (
            RewardSpec::MultipleChoice {
                gold: "B".into(),
                choices: vec![],
            },
            "Options A and C are wrong, so the answer is (B).",
        ),
        (
            RewardSpec::Numeric {
                gold: 42.0,
                tolerance: 0.5,
            },
            "Six times seven gives \\boxed{42.2}",
        ),
        (
            RewardSpec::Rule {
                rule: RuleExpr::AllOf(vec![
                    RuleExpr::ContainsIgnoreCase("paris".into()),
                    RuleExpr::Not(Box::new(RuleExpr::Contains("Lyon".into()))),
                ]),
            },
            "It is Paris.",
        ),
        (
            RewardSpec::LlmJudge {
                gold: "Paris".into(),
                rubric: None,
            },
            "The capital is Paris.",
        ),
        (
            RewardSpec::External {
                verifier_id: "word_count".into(),
                params: serde_json::json!({"max_words": 3}),
            },
            "Paris, of course.",
        ),
    ];
    for (spec, response) in &cases {
        let scored = scorer.score(spec, response, &example(spec)).unwrap();
        println!(
            "{:<16} extracted {:<10?} reward {}  {}",
            format!("{:?}", spec.kind()),
            extract_final_answer(response, spec.kind()),
            scored.reward.value(),
            scored.diagnostic.unwrap_or_default()
        );
    }
}
