//! Loads the toy corpus and writes reproducible train/test manifests.
//!
//! cargo run --example split_corpus

#[path = "common/toy.rs"]
mod toy;

use clue::harness::{cmd_split, SplitConfig};

fn main() {
    let mut cfg = SplitConfig {
        train_n: 2,
        seed: 3,
        ..Default::default()
    };
    // Per-dataset override, e.g. a dataset that needs a bigger train share.
    cfg.train_n_overrides.insert("arith".into(), 3);
    let out = std::env::temp_dir().join("clue-split-toy");
    let (train, test) = cmd_split(&toy::data_dir().join("toy_corpus.jsonl"), &cfg, &out).expect("split");
    println!("train {:?}", train.task_ids);
    println!("test  {:?}", test.task_ids);
    let (again, _) = cmd_split(&toy::data_dir().join("toy_corpus.jsonl"), &cfg, &out).unwrap();
    assert_eq!(again, train);
    println!("manifests written to {}", out.display());
}
