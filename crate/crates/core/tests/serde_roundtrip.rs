//! Every persisted type survives a JSON round trip unchanged.

use clue::continual::MemoryEntry;
use clue::domain::{Category, Conversation, Example, MemorySet, Message, PairLog, Reward, Role};
use clue::evolve::EvolutionConfig;
use clue::harness::HarnessConfig;
use clue::reward::{RewardSpec, RuleExpr};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.?!:'\"{}\\-]{0,40}".prop_map(|s| format!("x{s}"))
}

fn role() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::System), Just(Role::User), Just(Role::Assistant), Just(Role::Tool)]
}

fn conversation() -> impl Strategy<Value = Conversation> {
    prop::collection::vec((role(), text()), 1..5).prop_map(|ms| {
        Conversation::new(ms.into_iter().map(|(r, c)| Message::new(r, c).unwrap()).collect()).unwrap()
    })
}

fn rule() -> impl Strategy<Value = RuleExpr> {
    let leaf = prop_oneof![
        text().prop_map(RuleExpr::Contains),
        text().prop_map(RuleExpr::ContainsIgnoreCase),
        "[a-z]{1,5}".prop_map(RuleExpr::Regex),
        text().prop_map(RuleExpr::AnswerEquals),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(RuleExpr::AllOf),
            prop::collection::vec(inner.clone(), 1..3).prop_map(RuleExpr::AnyOf),
            inner.prop_map(|r| RuleExpr::Not(Box::new(r))),
        ]
    })
}

fn reward_spec() -> impl Strategy<Value = RewardSpec> {
    prop_oneof![
        (text(), prop::collection::vec(text(), 0..3)).prop_map(|(gold, aliases)| RewardSpec::ExactMatch { gold, aliases }),
        ("[A-E]", prop::collection::vec("[A-E]", 0..3)).prop_map(|(gold, mut choices)| {
            if !choices.is_empty() {
                choices.push(gold.clone());
            }
            RewardSpec::MultipleChoice { gold, choices }
        }),
        rule().prop_map(|rule| RewardSpec::Rule { rule }),
        // Quarter steps are exact in binary, so float parsing is lossless.
        (any::<i32>(), 0u16..100).prop_map(|(g, t)| RewardSpec::Numeric {
            gold: g as f64 / 4.0,
            tolerance: t as f64 / 4.0
        }),
        (text(), prop::option::of(text())).prop_map(|(gold, rubric)| RewardSpec::LlmJudge { gold, rubric }),
        ("[a-z_]{1,10}", any::<i64>()).prop_map(|(verifier_id, n)| RewardSpec::External {
            verifier_id,
            params: serde_json::json!({ "n": n }),
        }),
    ]
}

fn category() -> impl Strategy<Value = Option<Category>> {
    prop::option::of(prop::sample::select(Category::ALL.to_vec()))
}

fn example() -> impl Strategy<Value = Example> {
    ("[a-z0-9-]{1,12}", "[a-z]{1,8}", category(), conversation(), text(), reward_spec())
        .prop_map(|(id, ds, cat, conv, q, spec)| Example::new(id, ds, cat, conv, q, spec).unwrap())
}

fn round_trip<T>(value: &T) -> T
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    serde_json::from_str(&serde_json::to_string(value).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn examples(e in example()) {
        prop_assert_eq!(round_trip(&e), e);
    }

    #[test]
    fn pair_logs(
        e in example(),
        memory in prop::collection::vec(text(), 0..4),
        target in conversation(),
        quarter in 0u8..=4,
        summary in prop::option::of(text()),
        round in 0u32..10,
        repetition in 0u32..3,
    ) {
        let raw = memory.iter().enumerate().map(|(i, m)| format!("{}. {m}", i + 1)).collect::<Vec<_>>().join("\n");
        let log = PairLog {
            task_id: e.task_id.clone(),
            dataset_id: e.dataset_id.clone(),
            prompt_id: "p".into(),
            round,
            repetition,
            source_conversation: e.source_conversation.clone(),
            extracted_memory: MemorySet::from_raw(raw),
            target_conversation: target,
            target_reward: Reward::new(quarter as f64 / 4.0).unwrap(),
            summary,
            diagnostic: None,
        };
        prop_assert_eq!(round_trip(&log), log);
    }

    #[test]
    fn evolution_configs(rounds in 1u32..10, x in 2usize..50, c in 1usize..5, seed in any::<u64>()) {
        let cfg = EvolutionConfig { num_rounds: rounds, batch_x: x, extra_sample_y: x / 2, num_candidates: c, seed, ..Default::default() };
        prop_assert_eq!(round_trip(&cfg), cfg);
    }

    #[test]
    fn memory_entries(t in text(), v in prop::collection::vec(-1000i32..1000, 1..16), seq in any::<u32>()) {
        let e = MemoryEntry {
            text: t,
            embedding: v.into_iter().map(|x| x as f64 / 8.0).collect(),
            origin_task_id: "o".into(),
            seq: seq as u64,
        };
        prop_assert_eq!(round_trip(&e), e);
    }
}

#[test]
fn harness_config_defaults_round_trip() {
    let c = HarnessConfig::default();
    assert_eq!(round_trip(&c), c);
}
