use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lio_cli::{cmd_benchmarks_list, cmd_demo_bisection, cmd_run, RunFlags};

/// Information-driven search for the maximum of an expensive black-box function.
#[derive(Parser)]
#[command(name = "lio", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an optimization described by a JSON config.
    Run {
        config: PathBuf,
        /// Validate the config and exit without running or writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Also write surface.csv with the final posterior over the candidates.
        #[arg(long)]
        surface: bool,
        /// Write outputs here instead of the configured output_dir.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Entropy of guessing one of N equally likely numbers by yes/no questions.
    DemoBisection { n: u64 },
    /// Built-in benchmark functions.
    Benchmarks {
        #[command(subcommand)]
        action: BenchAction,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    /// List names, domains and known optima.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Cmd::Run {
            config,
            dry_run,
            surface,
            out,
        } => cmd_run(
            &config,
            &RunFlags {
                dry_run,
                surface,
                output_dir: out,
            },
            &mut stdout,
        ),
        Cmd::DemoBisection { n } => cmd_demo_bisection(n, &mut stdout),
        Cmd::Benchmarks {
            action: BenchAction::List,
        } => cmd_benchmarks_list(&mut stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lio: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
