use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use svelab::mlf::mittag_leffler_closed;
use svelab_cli::{describe::describe, CliError, Kind, Overrides};

/// Experiments on stochastic Volterra equations with fractional kernels.
#[derive(Parser)]
#[command(name = "svelab", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides numerics.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides numerics.workers.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<String>,
    /// Print the config schema of an experiment kind.
    #[arg(long, value_name = "KIND")]
    describe: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_{alpha,beta}(x).
    Ml {
        alpha: f64,
        beta: f64,
        #[arg(allow_negative_numbers = true)]
        x: f64,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(Command::Ml { alpha, beta, x }) = cli.command {
        return match mittag_leffler_closed(alpha, beta, x) {
            Ok(v) => {
                println!("{v}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(CliError::Runtime(e)),
        };
    }
    if let Some(kind) = cli.describe {
        return match Kind::parse(&kind) {
            Ok(k) => {
                print!("{}", describe(k));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }
    let Some(config) = cli.config else {
        return fail(CliError::Validation(vec!["one of --config, --describe or the ml subcommand is required".into()]));
    };
    let ov = Overrides { seed: cli.seed, workers: cli.workers, out: cli.out };
    match svelab_cli::run_file(&config, &ov) {
        Ok((table, files)) => {
            print!("{table}");
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
