//! `rppa`: optimal pricing trees against a strategic buyer.
//!
//! Exit codes: 0 success, 1 success with warnings, 2 usage error,
//! 3 domain error, 4 I/O error.

mod commands;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{Common, ConfigFile, SimulateArgs, SweepArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] rppa_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rppa", version, about = "Optimal repeated posted-price auctions with a strategic buyer")]
struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Myerson price and one-shot revenue of a distribution.
    Myerson {
        /// Distribution, as an alternative to --dist.
        dist_spec: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal completely active pricing tree.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Optimal revenue over a grid of discount rates, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Buyer best responses to a given tree over the valuation support, as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        simulate: SimulateArgs,
    },
    /// The big-deal scheme and its revenue against the constant Myerson price.
    Bigdeal {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated discounts of an infinite game.
    Truncate {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    let config = match &cli.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let report = match cli.command {
        Command::Myerson { dist_spec, mut common } => {
            if dist_spec.is_some() && common.dist.is_some() {
                return Err(CliError::Usage("give the distribution either positionally or with --dist".into()));
            }
            common.dist = common.dist.or(dist_spec);
            config.fill_common(&mut common);
            let r = commands::myerson(&common)?;
            (r, common.out)
        }
        Command::Optimize { mut common } => {
            config.fill_common(&mut common);
            (commands::optimize(&common)?, common.out)
        }
        Command::Sweep { mut common, mut sweep } => {
            config.fill_common(&mut common);
            config.fill_sweep(&mut sweep);
            (commands::sweep(&common, &sweep)?, common.out)
        }
        Command::Simulate { mut common, mut simulate } => {
            config.fill_common(&mut common);
            config.fill_simulate(&mut simulate);
            let sim = commands::simulate(&common, &simulate)?;
            let summary = format!("{{\"expected_revenue\": {}}}\n", serde_json::json!(sim.expected_revenue));
            match &common.out {
                Some(p) => {
                    write_output(Some(p), &sim.csv)?;
                    write_output(None, &summary)?;
                }
                None => {
                    write_output(None, &sim.csv)?;
                    eprint!("{summary}");
                }
            }
            return Ok(vec![]);
        }
        Command::Bigdeal { mut common } => {
            config.fill_common(&mut common);
            (commands::bigdeal(&common)?, common.out)
        }
        Command::Truncate { mut common } => {
            config.fill_common(&mut common);
            (commands::truncate_cmd(&common)?, common.out)
        }
    };
    let (report, out) = report;
    write_output(out.as_deref(), &report.text)?;
    Ok(report.warnings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(warnings) if warnings.is_empty() => ExitCode::SUCCESS,
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
