mod common;

use clue::assets::{self, render};
use common::golden::{cases, first_difference};

#[test]
fn templates_match_fixtures_byte_for_byte() {
    for (name, rendered, expected) in cases() {
        if let Some((line, got, want)) = first_difference(&rendered, &expected) {
            panic!("{name}: line {line}\n  got:  {got:?}\n  want: {want:?}");
        }
        assert_eq!(rendered.as_bytes(), expected.as_bytes(), "{name}");
    }
}

#[test]
fn rendering_is_single_pass() {
    let out = render("{a} and {b}", &[("a", "{b}"), ("b", "x")]);
    assert_eq!(out, "{b} and x");
}

#[test]
fn no_placeholders_survive_rendering() {
    let placeholder = regex::Regex::new(r"\{[a-z_]+\}").unwrap();
    for (name, rendered, _) in cases() {
        if name.starts_with("template:") {
            continue;
        }
        assert!(!placeholder.is_match(&rendered), "{name} still has a placeholder");
    }
    assert!(assets::GENERATION.contains("{memory}") && assets::GENERATION.contains("{query}"));
}
