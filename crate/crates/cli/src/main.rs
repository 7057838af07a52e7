use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use projflow_cli::{commands, Options};

#[derive(Parser)]
#[command(
    name = "projflow",
    version,
    about = "Projected gradient flow experiments"
)]
struct Cli {
    /// Exit with status 4 when a verdict fails
    #[arg(long, global = true)]
    strict: bool,
    /// Directory for output files
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for probe sampling in `check`
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one experiment and write trajectory and report CSVs
    Run {
        /// Config file path or `preset:NAME`
        config: String,
    },
    /// Repeat an experiment over values of one parameter
    Sweep {
        config: String,
        /// One of alpha, theta, K, step
        param: String,
        /// Comma-separated values, e.g. 0.25,0.5,0.75
        #[arg(default_value = "")]
        values: String,
    },
    /// Validate schedule, objective and set before running
    Check { config: String },
    /// List the built-in presets
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        strict: cli.strict,
        out_dir: cli.out_dir,
        seed: cli.seed,
    };
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = match &cli.command {
        Command::Run { config } => commands::run(config, &opts, &mut out, &mut err),
        Command::Sweep {
            config,
            param,
            values,
        } => commands::sweep(config, param, values, &opts, &mut out, &mut err),
        Command::Check { config } => commands::check(config, &opts, &mut out, &mut err),
        Command::Presets => {
            for name in projflow_cli::presets::names() {
                println!("preset:{name}");
            }
            0
        }
    };
    ExitCode::from(code as u8)
}
