use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clue::harness::{self, Harness, HarnessConfig, HarnessError};

/// Evaluate and evolve memory-extraction prompts.
#[derive(Debug, Parser)]
#[command(name = "clue", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Serve every model role from a scripted reply file instead of the network.
    #[arg(long, global = true)]
    mock: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a prompt on a test manifest.
    Evaluate {
        /// Built-in prompt id (simple, mem0, reasoningbank, openmemory, survey, no_memory) or a file.
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        test: PathBuf,
        /// Report to compute relative gain against.
        #[arg(long)]
        base: Option<PathBuf>,
        /// Fail unless relative gain can be computed.
        #[arg(long)]
        rg: bool,
        /// Output directory [default: <work_dir>/evaluate].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a seed prompt on a train manifest.
    Evolve {
        #[arg(long)]
        seed_prompt: String,
        #[arg(long)]
        train: PathBuf,
        /// Output directory [default: <work_dir>/evolve].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the streaming retrieve/answer/extract pipeline.
    Continual {
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Output directory [default: <work_dir>/continual].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved report as a table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Split a corpus into train and test manifests.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory [default: <work_dir>/splits].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let harness = || Harness::from_paths(cli.config.as_deref(), cli.mock.as_deref());
    let config = || match &cli.config {
        Some(p) => HarnessConfig::load(p),
        None => Ok(HarnessConfig::default()),
    };
    match &cli.command {
        Command::Evaluate {
            prompt,
            test,
            base,
            rg,
            out,
        } => {
            let h = harness()?;
            let out = out.clone().unwrap_or_else(|| h.config().work_dir.join("evaluate"));
            let r = harness::cmd_evaluate(&h, prompt, test, base.as_deref(), *rg, &out)?;
            print!("{}", r.table);
            eprintln!("report written to {}", r.report_path.display());
        }
        Command::Evolve { seed_prompt, train, out } => {
            let h = harness()?;
            let out = out.clone().unwrap_or_else(|| h.config().work_dir.join("evolve"));
            let r = harness::cmd_evolve(&h, seed_prompt, train, &out)?;
            println!(
                "winner {} after {} rounds ({} optimization calls, {} evaluation calls)",
                r.best.prompt_id(),
                r.lineage.rounds.len(),
                r.usage.optimization_llm_calls,
                r.usage.evaluation_calls
            );
            eprintln!("outputs written to {}", out.display());
        }
        Command::Continual { prompt, stream, k, out } => {
            let h = harness()?;
            let out = out.clone().unwrap_or_else(|| h.config().work_dir.join("continual"));
            let r = harness::cmd_continual(&h, prompt, stream, *k, &out)?;
            print!("{}", harness::render_continual_summary(&r));
            eprintln!("outputs written to {}", out.display());
        }
        Command::Report { input, base } => {
            print!("{}", harness::cmd_report(input, base.as_deref())?);
        }
        Command::Split { corpus, out } => {
            let cfg = config()?;
            let out = out.clone().unwrap_or_else(|| cfg.work_dir.join("splits"));
            let (train, test) = harness::cmd_split(corpus, &cfg.split, &out)?;
            println!(
                "train: {} tasks, test: {} tasks -> {}",
                train.task_ids.len(),
                test.task_ids.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
