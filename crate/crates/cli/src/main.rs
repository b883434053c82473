use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Context;
use config::{ScenarioConfig, TheoremConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "twophoton", version, about = "Two-photon cat-qubit simulations and slow-dynamics reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Dotted-path assignment applied to the config, e.g. model.epsilon=0.02.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the full Lindblad model.
    Simulate(Common),
    /// Integrate the reduced two-level model.
    Reduced(Common),
    /// Run full and reduced models side by side.
    Compare(Common),
    /// Run the convergence and reduction checks.
    TheoremCheck(Common),
    /// Reduce a linear slow/fast system read from a block file.
    ReduceLinear {
        matrix_file: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => scenario(&c, commands::simulate),
        Command::Reduced(c) => scenario(&c, commands::reduced),
        Command::Compare(c) => scenario(&c, commands::compare),
        Command::TheoremCheck(c) => {
            let cfg: TheoremConfig = config::load(c.config.as_deref(), &c.overrides)?;
            let ctx = Context {
                config_path: c.config.as_deref(),
                output_dir: c.output.as_deref(),
            };
            commands::theorem_check(&cfg, &ctx).map(|_| ())
        }
        Command::ReduceLinear { matrix_file, output } => {
            let ctx = Context {
                config_path: None,
                output_dir: output.as_deref(),
            };
            commands::reduce_linear(&matrix_file, &ctx).map(|_| ())
        }
    }
}

fn scenario(
    c: &Common,
    f: fn(&ScenarioConfig, &Context) -> Result<serde_json::Value, CliError>,
) -> Result<(), CliError> {
    let cfg: ScenarioConfig = config::load(c.config.as_deref(), &c.overrides)?;
    let ctx = Context {
        config_path: c.config.as_deref(),
        output_dir: c.output.as_deref(),
    };
    let summary = f(&cfg, &ctx)?;
    if let Some(a) = summary.get("artifacts") {
        log::info!("wrote {a}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
