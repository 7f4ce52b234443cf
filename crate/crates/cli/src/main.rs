use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod artifacts;
mod config;
mod error;
mod io;
mod plot;
mod simulate;
mod solve;
mod verify;

use config::RunConfig;
use error::{CliError, Result};

/// Optimal procurement mechanisms: solve, simulate, verify and plot.
#[derive(Debug, Parser)]
#[command(name = "procure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the optimal allocation and the mechanism implementing it.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo run of a mechanism under dominant-strategy bidding.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Mechanism file; defaults to the one written by `solve`.
        #[arg(long)]
        mechanism: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the solve outputs against Border, the LP oracle and dominance.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mechanism: Option<PathBuf>,
    },
    /// Draw the ironing and allocation figures from the solve outputs.
    Plot {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Solve { common }
            | Command::Simulate { common, .. }
            | Command::Verify { common, .. }
            | Command::Plot { common } => common,
        }
    }
}

fn prepare(common: &Common, create: bool) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&common.config)?;
    let out = cfg.out_dir(common.out.as_deref());
    if create {
        fs::create_dir_all(&out).map_err(|e| CliError::write(&out, e))?;
    } else if !out.is_dir() {
        return Err(CliError::missing(&out, "no such directory; run solve first"));
    }
    Ok((cfg, out))
}

fn run(command: &Command) -> Result<()> {
    let creates = matches!(command, Command::Solve { .. } | Command::Simulate { .. });
    let (cfg, out) = prepare(command.common(), creates)?;
    match command {
        Command::Solve { .. } => solve::run(&cfg, &out).map(drop),
        Command::Simulate {
            mechanism,
            trials,
            seed,
            ..
        } => {
            let over = simulate::Overrides {
                mechanism: mechanism.as_deref(),
                trials: *trials,
                seed: *seed,
            };
            simulate::run(&cfg, &out, &over).map(drop)
        }
        Command::Verify { mechanism, .. } => verify::run(&cfg, &out, mechanism.as_deref()),
        Command::Plot { .. } => plot::run(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
