//! Macro accuracy and relative gain, including the zero-baseline exclusion.
//!
//! cargo run --example metrics

use std::collections::BTreeMap;

use clue::metrics::{macro_accuracy, relative_gain, relative_gain_direct};

fn means(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn main() {
    let base = means(&[("a", 0.5), ("b", 0.4)]);
    let new = means(&[("a", 0.55), ("b", 0.44)]);
    println!("MA(base) = {:.4}", macro_accuracy(&base).unwrap());
    println!("MA(new)  = {:.4}", macro_accuracy(&new).unwrap());
    let g = relative_gain(&new, &base).unwrap();
    println!("RG(new vs base) = {:+.6} (log space)", g.value);
    println!("RG(new vs base) = {:+.6} (direct product)", relative_gain_direct(&new, &base).unwrap().value);

    // A dataset where the base scores zero cannot enter a ratio.
    let base = means(&[("a", 0.5), ("b", 0.0)]);
    let new = means(&[("a", 0.6), ("b", 0.3)]);
    let g = relative_gain(&new, &base).unwrap();
    println!("RG with zero base = {:+.4}, excluded {:?}", g.value, g.excluded);

    // Size does not matter: one tiny dataset weighs as much as a large one.
    let skewed = means(&[("tiny", 1.0), ("huge", 0.0)]);
    println!("MA(skewed) = {}", macro_accuracy(&skewed).unwrap());
}
