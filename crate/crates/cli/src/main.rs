use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ipl_bench::{run_command, CliCommand, Verb};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VerbArg {
    /// Train one ensemble with the configured optimizer.
    Train,
    /// Train GD, Adam and the algebraic rule on the same data and seeds.
    Compare,
    /// Final MSE against the shot budget.
    SweepShots,
    /// Final loss against the per-layer dephasing rate (exact outputs).
    SweepDephasing,
}

impl From<VerbArg> for Verb {
    fn from(v: VerbArg) -> Self {
        match v {
            VerbArg::Train => Verb::Train,
            VerbArg::Compare => Verb::Compare,
            VerbArg::SweepShots => Verb::SweepShots,
            VerbArg::SweepDephasing => Verb::SweepDephasing,
        }
    }
}

/// Teacher-student benchmark for inverse-probability QNN training.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    verb: VerbArg,

    /// Flat key=value config file.
    #[arg(short, long)]
    config: PathBuf,

    /// Directory for history/sweep CSVs and JSON summaries.
    #[arg(short, long)]
    out: PathBuf,

    /// Override a config key, e.g. `--set lambda=1.0`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Comma-separated sweep points (shot counts or dephasing rates).
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<String>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cmd = CliCommand {
        verb: args.verb.into(),
        config_path: args.config,
        output_dir: args.out,
        overrides: args.overrides,
        sweep_values: args.values,
    };
    match run_command(&cmd) {
        Ok(outcome) => {
            if outcome.partial {
                eprintln!("error: some runs aborted; see summary.json (partial outputs)");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
