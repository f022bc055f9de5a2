use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mvrsm::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mvrsm", version, about = "Mixed-variable ReLU surrogate optimizer and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of an experiment config.
    Run {
        config: PathBuf,
        /// Output directory; overrides MVRSM_OUTPUT_DIR and the config file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recompute summary.csv from the trace files in a directory.
    Summarize { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match experiment::run_experiment(&cfg, output.as_deref()) {
                Ok(report) => {
                    for f in &report.failures {
                        eprintln!("run {} seed {} failed: {}", f.algorithm, f.seed, f.message);
                    }
                    let last = report.summary.iter().filter(|r| r.iter == cfg.optimizer.budget);
                    for r in last {
                        println!(
                            "{:<6} final best {:.6e} ± {:.3e} over {} runs",
                            r.algo, r.mean_best, r.std_best, r.runs
                        );
                    }
                    println!(
                        "wrote {} traces and {}",
                        report.trace_files.len(),
                        report.summary_file.display()
                    );
                    ExitCode::from(report.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Summarize { dir } => match experiment::summarize(&dir) {
            Ok(rows) => {
                println!("wrote {} rows to {}", rows.len(), dir.join(experiment::SUMMARY_FILE).display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
