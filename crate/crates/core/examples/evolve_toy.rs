//! Two rounds of cluster-guided evolution on the toy corpus. Prints each
//! round's clusters and tournament, then writes the lineage to a temp dir.
//!
//! cargo run --example evolve_toy

#[path = "common/toy.rs"]
mod toy;

use clue::domain::PromptCandidate;
use clue::evolve::{Clue, EvolutionConfig};
use clue::runner::Runner;

fn main() {
    let train = toy::corpus();
    let config = EvolutionConfig {
        num_rounds: 2,
        batch_x: 4,
        extra_sample_y: 2,
        num_candidates: 2,
        seed: 7,
        ..Default::default()
    };
    let work = std::env::temp_dir().join("clue-evolve-toy");
    let _ = std::fs::remove_dir_all(&work);
    let runner = Runner::new(toy::gateway(toy::world())).with_max_in_flight(4);
    let clue = Clue::new(runner, config, &work).expect("valid config");
    let seed = PromptCandidate::seed("seed", "Extract useful memories as a numbered list.").unwrap();

    let result = clue
        .evolve_with_observer(&seed, &train, &mut |r| {
            println!("round {}  incumbent {}", r.round, r.incumbent_id);
            for c in &r.clusters {
                println!("  {} {:<22} {:?}", c.cluster_id, c.label, c.task_ids);
            }
            for s in &r.eval_means {
                println!("  {:<10} mean reward {:.3}", s.prompt_id, s.mean_reward);
            }
            println!(
                "  winner {}  ({} optimization calls, {} evaluation calls)\n",
                r.winner_id, r.calls.optimization_llm_calls, r.calls.evaluation_calls
            );
        })
        .expect("toy evolution succeeds");

    println!("best prompt ({}):\n{}\n", result.best.prompt_id(), result.best.text());
    let path = work.join("lineage.json");
    std::fs::write(&path, serde_json::to_string_pretty(&result.lineage).unwrap()).unwrap();
    println!("lineage written to {}", path.display());
}
