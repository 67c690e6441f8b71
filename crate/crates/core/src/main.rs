use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bugnet::centrality;
use bugnet::error::Result;
use bugnet::pipeline::{load_config, load_synth_config, run_pipeline};
use bugnet::synth::generate_jsonl;

#[derive(Parser)]
#[command(
    name = "bugnet",
    version,
    about = "Sliding-window social network analysis over issue-tracker event streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis pipeline from a config file.
    Analyze {
        /// Flat key = value config file.
        #[arg(long)]
        config: PathBuf,
        /// Rebuild every window from scratch instead of sliding
        /// incrementally (differential-testing baseline).
        #[arg(long)]
        naive_windows: bool,
    },
    /// Generate a synthetic event log with planted ground truth.
    Synth {
        /// Flat key = value config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Verify fast betweenness against the brute-force oracle on seeded
    /// random graphs.
    OracleCheck {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 10)]
        max_nodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            config,
            naive_windows,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.naive_windows |= naive_windows;
            let manifest = run_pipeline(&cfg)?;
            for note in &manifest.notes {
                eprintln!("note: {note}");
            }
            println!(
                "wrote {} artifacts to {}",
                manifest.artifacts.len(),
                cfg.output_dir.display()
            );
            for (name, hash) in &manifest.artifacts {
                println!("{hash}  {name}");
            }
            Ok(())
        }
        Command::Synth { config } => {
            let (cfg, out_dir) = load_synth_config(&config)?;
            let (jsonl, truth) = generate_jsonl(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            let events = out_dir.join("events.jsonl");
            std::fs::write(&events, jsonl)?;
            let truth_path = out_dir.join("ground_truth.csv");
            std::fs::write(&truth_path, truth.to_csv())?;
            println!("wrote {}", events.display());
            println!("wrote {}", truth_path.display());
            Ok(())
        }
        Command::OracleCheck {
            trials,
            max_nodes,
            seed,
        } => {
            let summary = centrality::oracle_check(trials, max_nodes, seed, 1e-9)?;
            println!(
                "oracle-check: {} trials x 3 distance modes on graphs <= {} nodes",
                summary.trials, summary.max_nodes
            );
            println!(
                "oracle-check: max |fast - brute| = {:.3e}, {:.2}s",
                summary.max_abs_diff, summary.elapsed_secs
            );
            println!("oracle-check: PASS");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap reports its own usage errors with exit code 2, matching
    // Error::Usage for config-level misuse
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
