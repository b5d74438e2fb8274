//! Command-line driver: dataset simulation, preparation, training, delay
//! sweeps and evaluation. Every command is deterministic given its flags,
//! configs and seeds; run manifests record inputs/outputs with hashes.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 training failure, 4 evaluation
//! failure.

mod commands;

use clap::{Parser, Subcommand};

use commands::{evaluate, prepare, simulate, sweep, train, CliError};

#[derive(Parser)]
#[command(name = "tdsmrp", version, about = "TD value learning over irregular event sequences")]
struct Cli {
    /// Worker-thread cap; defaults to TDSMRP_THREADS or the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic cohort into a dataset file.
    Simulate(simulate::Args),
    /// Split patients into folds and fit standardization stats on train.
    Prepare(prepare::Args),
    /// Train one candidate model family across seeds.
    Train(train::Args),
    /// Train TD models over a set of state-to-state delays and pick one.
    Sweep(sweep::Args),
    /// Score checkpoints on internal/external datasets and emit the report.
    Evaluate(evaluate::Args),
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("TDSMRP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    init_threads(cli.threads);
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Prepare(args) => prepare::run(&args),
        Command::Train(args) => train::run(&args),
        Command::Sweep(args) => sweep::run(&args),
        Command::Evaluate(args) => evaluate::run(&args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_subcommands() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_match_the_contract() {
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(CliError::Training("x".into()).exit_code(), 3);
        assert_eq!(CliError::Evaluation("x".into()).exit_code(), 4);
    }
}
