//! Reward functions mapping a generated response to `[0, 1]`.
//!
//! All built-in kinds are binary. Scoring is total: a response that cannot be
//! parsed scores 0 and carries a diagnostic instead of failing.
//!
//! # Answer extraction grammar (version 1)
//!
//! [`extract_final_answer`] picks a candidate segment, in order of preference:
//!
//! 1. the text after the last `Answer:` marker on its line (case-insensitive,
//!    bold markers around the word allowed);
//! 2. the content of the last `\boxed{...}`, else the last `**...**` span;
//! 3. the last non-empty line.
//!
//! The segment is then cleaned (surrounding quotes, `$`, backticks and bold
//! markers, a leading "the answer is", trailing `.,;:!`). Numeric specs keep
//! the last number of the segment (falling back to the last number anywhere);
//! multiple-choice specs keep the last standalone capital letter.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::assets;
use crate::domain::{Example, Reward};
use crate::gateway::{Gateway, RoleTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    ExactMatch {
        gold: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        aliases: Vec<String>,
    },
    MultipleChoice {
        gold: String,
        /// Valid choice letters; empty means `A`..`J`.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        choices: Vec<String>,
    },
    Rule {
        rule: RuleExpr,
    },
    Numeric {
        gold: f64,
        #[serde(default)]
        tolerance: f64,
    },
    LlmJudge {
        gold: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rubric: Option<String>,
    },
    External {
        verifier_id: String,
        #[serde(default)]
        params: Value,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    ExactMatch,
    MultipleChoice,
    Rule,
    Numeric,
    LlmJudge,
    External,
}

/// Boolean expression over the full response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleExpr {
    Contains(String),
    ContainsIgnoreCase(String),
    Regex(String),
    /// Normalized extracted answer equals the given text.
    AnswerEquals(String),
    AllOf(Vec<RuleExpr>),
    AnyOf(Vec<RuleExpr>),
    Not(Box<RuleExpr>),
}

impl RuleExpr {
    fn validate(&self) -> Result<(), String> {
        match self {
            RuleExpr::Regex(p) => Regex::new(p).map(|_| ()).map_err(|e| format!("invalid regex: {e}")),
            RuleExpr::AllOf(v) | RuleExpr::AnyOf(v) => {
                if v.is_empty() {
                    return Err("all_of/any_of needs at least one operand".into());
                }
                v.iter().try_for_each(RuleExpr::validate)
            }
            RuleExpr::Not(inner) => inner.validate(),
            RuleExpr::Contains(_) | RuleExpr::ContainsIgnoreCase(_) | RuleExpr::AnswerEquals(_) => Ok(()),
        }
    }

    fn eval(&self, text: &str) -> Result<bool, String> {
        Ok(match self {
            RuleExpr::Contains(s) => text.contains(s.as_str()),
            RuleExpr::ContainsIgnoreCase(s) => text.to_lowercase().contains(&s.to_lowercase()),
            RuleExpr::Regex(p) => Regex::new(p).map_err(|e| e.to_string())?.is_match(text),
            RuleExpr::AnswerEquals(s) => {
                normalize(&extract_final_answer(text, RewardKind::ExactMatch)) == normalize(s)
            }
            RuleExpr::AllOf(v) => {
                for r in v {
                    if !r.eval(text)? {
                        return Ok(false);
                    }
                }
                true
            }
            RuleExpr::AnyOf(v) => {
                for r in v {
                    if r.eval(text)? {
                        return Ok(true);
                    }
                }
                false
            }
            RuleExpr::Not(inner) => !inner.eval(text)?,
        })
    }
}

impl RewardSpec {
    pub fn kind(&self) -> RewardKind {
        match self {
            RewardSpec::ExactMatch { .. } => RewardKind::ExactMatch,
            RewardSpec::MultipleChoice { .. } => RewardKind::MultipleChoice,
            RewardSpec::Rule { .. } => RewardKind::Rule,
            RewardSpec::Numeric { .. } => RewardKind::Numeric,
            RewardSpec::LlmJudge { .. } => RewardKind::LlmJudge,
            RewardSpec::External { .. } => RewardKind::External,
        }
    }

    /// The gold answer shown to a judge, when the kind has one.
    pub fn gold_text(&self) -> Option<String> {
        match self {
            RewardSpec::ExactMatch { gold, .. }
            | RewardSpec::MultipleChoice { gold, .. }
            | RewardSpec::LlmJudge { gold, .. } => Some(gold.clone()),
            RewardSpec::Numeric { gold, .. } => Some(gold.to_string()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |m: &str| Err(RewardError::InvalidSpec(m.to_string()));
        match self {
            RewardSpec::ExactMatch { gold, .. } if normalize(gold).is_empty() => bad("exact_match gold is empty"),
            RewardSpec::MultipleChoice { gold, choices } => {
                if gold.trim().is_empty() {
                    return bad("multiple_choice gold is empty");
                }
                if !choices.is_empty() && !choices.iter().any(|c| c.trim().eq_ignore_ascii_case(gold.trim())) {
                    return bad("multiple_choice gold is not among the choices");
                }
                Ok(())
            }
            RewardSpec::Numeric { gold, tolerance } => {
                if !gold.is_finite() {
                    return bad("numeric gold must be finite");
                }
                if !tolerance.is_finite() || *tolerance < 0.0 {
                    return bad("numeric tolerance must be finite and >= 0");
                }
                Ok(())
            }
            RewardSpec::Rule { rule } => rule.validate().map_err(RewardError::InvalidSpec),
            RewardSpec::LlmJudge { gold, .. } if gold.trim().is_empty() => bad("llm_judge gold is empty"),
            RewardSpec::External { verifier_id, .. } if verifier_id.trim().is_empty() => {
                bad("external verifier_id is empty")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("unknown external verifier {0:?}")]
    UnknownExternalVerifier(String),
    #[error("llm_judge scoring needs a gateway with a judge endpoint")]
    JudgeUnavailable,
    #[error("invalid reward spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub reward: Reward,
    pub diagnostic: Option<String>,
}

impl Scored {
    fn binary(hit: bool) -> Self {
        Scored {
            reward: if hit { Reward::ONE } else { Reward::ZERO },
            diagnostic: None,
        }
    }

    fn zero(diagnostic: impl Into<String>) -> Self {
        let diagnostic = diagnostic.into();
        log::debug!("scored 0: {diagnostic}");
        Scored {
            reward: Reward::ZERO,
            diagnostic: Some(diagnostic),
        }
    }
}

/// Inputs handed to an external verifier.
pub struct ExternalInput<'a> {
    pub example: &'a Example,
    pub response: &'a str,
    pub params: &'a Value,
}

pub type Verifier = Arc<dyn Fn(&ExternalInput<'_>) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub struct Scorer {
    judge: Option<Arc<Gateway>>,
    verifiers: HashMap<String, Verifier>,
}

impl std::fmt::Debug for Scorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scorer")
            .field("has_judge", &self.judge.is_some())
            .field("verifiers", &self.verifiers.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Scorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_judge(mut self, gateway: Arc<Gateway>) -> Self {
        self.judge = Some(gateway);
        self
    }

    pub fn register<F>(mut self, id: impl Into<String>, verifier: F) -> Self
    where
        F: Fn(&ExternalInput<'_>) -> f64 + Send + Sync + 'static,
    {
        self.verifiers.insert(id.into(), Arc::new(verifier));
        self
    }

    pub fn score(&self, spec: &RewardSpec, response: &str, example: &Example) -> Result<Scored, RewardError> {
        Ok(match spec {
            RewardSpec::ExactMatch { gold, aliases } => {
                let cand = normalize(&extract_final_answer(response, RewardKind::ExactMatch));
                if cand.is_empty() {
                    Scored::zero("unparsable response: no answer found")
                } else {
                    Scored::binary(std::iter::once(gold).chain(aliases).any(|g| normalize(g) == cand))
                }
            }
            RewardSpec::MultipleChoice { gold, choices } => {
                let letter = extract_choice(response, choices);
                if letter.is_empty() {
                    Scored::zero("unparsable response: no choice letter found")
                } else {
                    Scored::binary(letter.eq_ignore_ascii_case(gold.trim()))
                }
            }
            RewardSpec::Numeric { gold, tolerance } => {
                let cand = extract_final_answer(response, RewardKind::Numeric);
                match parse_number(&cand) {
                    Some(x) => Scored::binary((x - gold).abs() <= *tolerance),
                    None => Scored::zero("unparsable response: no number found"),
                }
            }
            RewardSpec::Rule { rule } => match rule.eval(response) {
                Ok(hit) => Scored::binary(hit),
                Err(e) => Scored::zero(format!("rule evaluation failed: {e}")),
            },
            RewardSpec::LlmJudge { gold, rubric } => {
                let gateway = self.judge.as_ref().ok_or(RewardError::JudgeUnavailable)?;
                if !gateway.has_route(RoleTag::Judge) {
                    return Err(RewardError::JudgeUnavailable);
                }
                let rubric_block = rubric
                    .as_deref()
                    .map(|r| format!("\nAdditional grading guidance:\n{r}\n"))
                    .unwrap_or_default();
                let user = assets::render(
                    assets::JUDGE,
                    &[
                        ("question", &example.target_query),
                        ("gold", gold),
                        ("response", response),
                        ("rubric", &rubric_block),
                    ],
                );
                match gateway.complete(&gateway.request(RoleTag::Judge, "", user)) {
                    Ok(resp) => Scored::binary(judge_verdict(&resp.text)),
                    Err(e) => Scored::zero(format!("judge call failed: {e}")),
                }
            }
            RewardSpec::External { verifier_id, params } => {
                let verifier = self
                    .verifiers
                    .get(verifier_id)
                    .ok_or_else(|| RewardError::UnknownExternalVerifier(verifier_id.clone()))?;
                let raw = verifier(&ExternalInput {
                    example,
                    response,
                    params,
                });
                if raw.is_nan() {
                    Scored::zero(format!("verifier {verifier_id} returned NaN"))
                } else {
                    Scored {
                        reward: Reward::new(raw.clamp(0.0, 1.0)).expect("clamped into range"),
                        diagnostic: (!(0.0..=1.0).contains(&raw))
                            .then(|| format!("verifier {verifier_id} returned {raw}; clamped")),
                    }
                }
            }
        })
    }
}

static THINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<think>.*?</think>").unwrap());
static MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\banswer\s*(?:\*\*)?\s*[:：]\s*(?:\*\*)?\s*(.*\S)").unwrap());
static BOXED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\boxed\{([^{}]*)\}").unwrap());
static BOLD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*\*([^*\n]+)\*\*").unwrap());
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][-+]?\d+)?|-?\.\d+").unwrap());
static LEADING_PHRASE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:the\s+)?(?:final\s+)?answer\s+is\s*[:：]?\s*").unwrap());
static LONE_LETTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\(?([A-Za-z])\)?[.):]?$").unwrap());
static STANDALONE_CAP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([A-Z])\b").unwrap());

fn candidate_segment(text: &str) -> String {
    let text = THINK.replace_all(text, "");
    if let Some(c) = MARKER.captures_iter(&text).last() {
        return c[1].to_string();
    }
    if let Some(c) = BOXED.captures_iter(&text).last() {
        return c[1].to_string();
    }
    if let Some(c) = BOLD.captures_iter(&text).last() {
        return c[1].to_string();
    }
    text.lines().rev().find(|l| !l.trim().is_empty()).unwrap_or("").to_string()
}

fn clean(segment: &str) -> String {
    let strip: &[char] = &['"', '\'', '`', '$', '*', ' ', '\t'];
    let s = segment.trim().trim_matches(strip);
    let s = LEADING_PHRASE.replace(s, "");
    s.trim_matches(strip)
        .trim_end_matches(['.', ',', ';', ':', '!'])
        .trim_matches(strip)
        .to_string()
}

/// Returns the substring the kind-specific matcher compares; empty when
/// nothing usable is found.
pub fn extract_final_answer(response: &str, kind: RewardKind) -> String {
    let segment = clean(&candidate_segment(response));
    match kind {
        RewardKind::Numeric => NUMBER
            .find_iter(&segment)
            .last()
            .or_else(|| NUMBER.find_iter(response).last())
            .map(|m| m.as_str().to_string())
            .unwrap_or_default(),
        RewardKind::MultipleChoice => extract_choice(response, &[]),
        _ => segment,
    }
}

fn extract_choice(response: &str, choices: &[String]) -> String {
    let segment = clean(&candidate_segment(response));
    let allowed = |l: &str| {
        if choices.is_empty() {
            ('A'..='J').any(|c| l.starts_with(c))
        } else {
            choices.iter().any(|c| c.trim().eq_ignore_ascii_case(l))
        }
    };
    if let Some(c) = LONE_LETTER.captures(&segment) {
        let l = c[1].to_ascii_uppercase();
        if allowed(&l) {
            return l;
        }
    }
    STANDALONE_CAP
        .captures_iter(&segment)
        .map(|c| c[1].to_string())
        .filter(|l| allowed(l))
        .last()
        .unwrap_or_default()
}

fn parse_number(s: &str) -> Option<f64> {
    s.replace(',', "").parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Lowercased, whitespace-collapsed, cleaned text.
pub fn normalize(s: &str) -> String {
    clean(s).to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Judge verdict grammar: after removing `<think>` blocks, the first word
/// token among `yes`, `no`, `correct`, `incorrect` decides; `yes` and
/// `correct` map to true. No decisive token maps to false.
pub fn judge_verdict(text: &str) -> bool {
    let text = THINK.replace_all(text, "").to_lowercase();
    text.split(|c: char| !c.is_alphabetic())
        .find_map(|w| match w {
            "yes" | "correct" => Some(true),
            "no" | "incorrect" => Some(false),
            _ => None,
        })
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Conversation, Role};
    use crate::gateway::{RetryPolicy, ScriptedBackend};

    fn example(spec: RewardSpec) -> Example {
        Example {
            task_id: "t".into(),
            dataset_id: "d".into(),
            category: None,
            source_conversation: Conversation::from_pairs([(Role::User, "hi")]).unwrap(),
            target_query: "What is it?".into(),
            reward_spec: spec,
        }
    }

    fn score(spec: RewardSpec, response: &str) -> f64 {
        let ex = example(spec.clone());
        Scorer::new().score(&spec, response, &ex).unwrap().reward.value()
    }

    #[test]
    fn exact_match_with_emphasis() {
        let spec = RewardSpec::ExactMatch { gold: "42".into(), aliases: vec![] };
        assert_eq!(score(spec.clone(), "The answer is **42**."), 1.0);
        assert_eq!(score(spec.clone(), "42"), 1.0);
        assert_eq!(score(spec.clone(), "The answer is 42."), 1.0);
        assert_eq!(score(spec, "The answer is 41."), 0.0);
    }

    #[test]
    fn exact_match_aliases_and_case() {
        let spec = RewardSpec::ExactMatch { gold: "Paris".into(), aliases: vec!["City of Paris".into()] };
        assert_eq!(score(spec.clone(), "Answer: paris"), 1.0);
        assert_eq!(score(spec, "Final answer: city  of PARIS."), 1.0);
    }

    #[test]
    fn multiple_choice() {
        let spec = RewardSpec::MultipleChoice { gold: "C".into(), choices: vec![] };
        assert_eq!(score(spec.clone(), "Let me think.\nAnswer: C"), 1.0);
        assert_eq!(score(spec.clone(), "Let me think.\nAnswer: B"), 0.0);
        assert_eq!(score(spec.clone(), "**Answer:** (C)"), 1.0);
        assert_eq!(score(spec.clone(), "I believe it is C"), 1.0);
        assert_eq!(score(spec, "no letter here"), 0.0);
    }

    #[test]
    fn multiple_choice_custom_choices() {
        let spec = RewardSpec::MultipleChoice { gold: "b".into(), choices: vec!["a".into(), "b".into()] };
        assert_eq!(score(spec, "Answer: B"), 1.0);
    }

    #[test]
    fn numeric_tolerance() {
        let spec = RewardSpec::Numeric { gold: 0.5, tolerance: 1e-3 };
        assert_eq!(score(spec.clone(), "so the value is ≈ 0.4999"), 1.0);
        assert_eq!(score(spec.clone(), "so the value is 0.51"), 0.0);
        assert_eq!(score(spec, "nothing numeric"), 0.0);
        let spec = RewardSpec::Numeric { gold: 1234.0, tolerance: 0.0 };
        assert_eq!(score(spec, "Answer: 1,234"), 1.0);
    }

    #[test]
    fn rules() {
        let rule = RuleExpr::AllOf(vec![
            RuleExpr::ContainsIgnoreCase("window".into()),
            RuleExpr::Not(Box::new(RuleExpr::Regex(r"\baisle\b".into()))),
        ]);
        let spec = RewardSpec::Rule { rule };
        assert_eq!(score(spec.clone(), "Booked a WINDOW seat"), 1.0);
        assert_eq!(score(spec, "Booked a window seat, not the aisle"), 0.0);
        let spec = RewardSpec::Rule {
            rule: RuleExpr::AnyOf(vec![RuleExpr::AnswerEquals("24".into()), RuleExpr::Contains("= 24".into())]),
        };
        assert_eq!(score(spec.clone(), "(4 + 8) * 2 = 24"), 1.0);
        assert_eq!(score(spec, "Answer: 24"), 1.0);
    }

    #[test]
    fn rule_spec_validation() {
        let bad = RewardSpec::Rule { rule: RuleExpr::Regex("(".into()) };
        assert!(bad.validate().is_err());
        let bad = RewardSpec::Rule { rule: RuleExpr::AnyOf(vec![]) };
        assert!(bad.validate().is_err());
        assert!(RewardSpec::Numeric { gold: 1.0, tolerance: -1.0 }.validate().is_err());
        assert!(RewardSpec::MultipleChoice { gold: "E".into(), choices: vec!["A".into()] }.validate().is_err());
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(extract_final_answer("Reasoning... Answer: D", RewardKind::MultipleChoice), "D");
        assert_eq!(extract_final_answer("Reasoning... Answer: D", RewardKind::ExactMatch), "D");
        assert_eq!(extract_final_answer("The total is 17.", RewardKind::Numeric), "17");
        assert_eq!(extract_final_answer("", RewardKind::Numeric), "");
        assert_eq!(extract_final_answer("", RewardKind::ExactMatch), "");
        assert_eq!(extract_final_answer("", RewardKind::MultipleChoice), "");
        assert_eq!(extract_final_answer("so \\boxed{7/2} it is", RewardKind::ExactMatch), "7/2");
    }

    #[test]
    fn unknown_external_verifier() {
        let spec = RewardSpec::External { verifier_id: "sandbox".into(), params: Value::Null };
        let ex = example(spec.clone());
        assert_eq!(
            Scorer::new().score(&spec, "x", &ex).unwrap_err(),
            RewardError::UnknownExternalVerifier("sandbox".into())
        );
    }

    #[test]
    fn external_verifier_is_clamped() {
        let spec = RewardSpec::External { verifier_id: "v".into(), params: serde_json::json!({"k": 2.0}) };
        let ex = example(spec.clone());
        let scorer = Scorer::new().register("v", |i| i.params["k"].as_f64().unwrap() * i.response.len() as f64);
        assert_eq!(scorer.score(&spec, "ab", &ex).unwrap().reward.value(), 1.0);
        assert_eq!(scorer.score(&spec, "", &ex).unwrap().reward.value(), 0.0);
        let nan = Scorer::new().register("v", |_| f64::NAN);
        let s = nan.score(&spec, "x", &ex).unwrap();
        assert_eq!(s.reward.value(), 0.0);
        assert!(s.diagnostic.is_some());
    }

    #[test]
    fn judge_kind_uses_gateway() {
        let backend = ScriptedBackend::new()
            .when_contains(RoleTag::Judge, "Response:\nParis", "Yes.")
            .default_reply(RoleTag::Judge, "No, it is wrong.");
        let gw = Arc::new(
            Gateway::builder()
                .route(RoleTag::Judge, Arc::new(backend))
                .retry(RetryPolicy::no_delay(0))
                .build(),
        );
        let spec = RewardSpec::LlmJudge { gold: "Paris".into(), rubric: None };
        let ex = example(spec.clone());
        let scorer = Scorer::new().with_judge(gw.clone());
        assert_eq!(scorer.score(&spec, "Paris", &ex).unwrap().reward.value(), 1.0);
        assert_eq!(scorer.score(&spec, "Lyon", &ex).unwrap().reward.value(), 0.0);
        assert_eq!(gw.usage().judge_calls, 2);
        assert_eq!(Scorer::new().score(&spec, "x", &ex).unwrap_err(), RewardError::JudgeUnavailable);
    }

    #[test]
    fn verdict_grammar() {
        let cases = [
            ("yes", true),
            ("Yes.", true),
            ("YES, the response is right", true),
            ("Correct", true),
            ("no", false),
            ("No. The answer differs.", false),
            ("Incorrect, but yes partially", false),
            ("<think>no wait</think>yes", true),
            ("", false),
            ("maybe", false),
            ("Verdict: yes", true),
        ];
        for (text, want) in cases {
            assert_eq!(judge_verdict(text), want, "{text:?}");
        }
    }

    #[test]
    fn reward_spec_json() {
        let spec: RewardSpec = serde_json::from_str(r#"{"kind":"numeric","gold":3.5,"tolerance":0.1}"#).unwrap();
        assert_eq!(spec, RewardSpec::Numeric { gold: 3.5, tolerance: 0.1 });
        let rule: RewardSpec =
            serde_json::from_str(r#"{"kind":"rule","rule":{"all_of":[{"contains":"a"},{"not":{"regex":"b+"}}]}}"#)
                .unwrap();
        assert_eq!(rule.kind(), RewardKind::Rule);
        assert!(serde_json::from_str::<RewardSpec>(r#"{"kind":"bleu","gold":"x"}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn builtin_kinds_are_total(s in ".{0,200}") {
            let specs = [
                RewardSpec::ExactMatch { gold: "42".into(), aliases: vec![] },
                RewardSpec::MultipleChoice { gold: "C".into(), choices: vec![] },
                RewardSpec::Numeric { gold: 0.5, tolerance: 1e-3 },
                RewardSpec::Rule { rule: RuleExpr::Regex(r"\d+".into()) },
            ];
            for spec in specs {
                let ex = example(spec.clone());
                let a = Scorer::new().score(&spec, &s, &ex).unwrap().reward.value();
                let b = Scorer::new().score(&spec, &s, &ex).unwrap().reward.value();
                proptest::prop_assert!((0.0..=1.0).contains(&a));
                proptest::prop_assert_eq!(a, b);
            }
        }
    }
}
