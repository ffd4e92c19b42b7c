//! Command-line flags and the JSON config file that mirrors them.
//!
//! Every flag has a config key of the same name. Values given on the
//! command line win over the config file.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Varying {
    Gb,
    Gs,
}

/// Built-in sweep grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// γS = 0.8, γB = 0.01 + 0.005·i for i = 0..148.
    VaryGb,
    /// γB = 0.2, γS = 0.2 + 0.005·i for i = 0..159.
    VaryGs,
}

/// Flags shared by the subcommands.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// Valuation distribution: uniform:LO,HI | beta:A,B | texp:RATE,UPPER.
    #[arg(long)]
    pub dist: Option<String>,
    /// Seller discount rate in (0, 1).
    #[arg(long)]
    pub gs: Option<f64>,
    /// Buyer discount rate in (0, 1).
    #[arg(long)]
    pub gb: Option<f64>,
    /// Number of rounds of a finite game.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Truncation depth of an infinite game.
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random starting points of the optimizer.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Jitter the buyer weights by up to this amount to break regularity ties.
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Which rate the grid varies; the other is fixed by --gs or --gb.
    #[arg(long, value_enum)]
    pub vary: Option<Varying>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Truncation depths of an infinite game, e.g. 2,3,4,5,6.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Pricing tree JSON file.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Number of valuations on the support grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Treat the game as infinite and fold the discount tail into the
    /// tree's last round.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub tail: Option<bool>,
}

/// Contents of a `--config` file: every flag, all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub dist: Option<String>,
    pub gs: Option<f64>,
    pub gb: Option<f64>,
    pub horizon: Option<usize>,
    pub tau: Option<usize>,
    pub seed: Option<u64>,
    pub starts: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub perturb: Option<f64>,
    pub out: Option<PathBuf>,
    pub vary: Option<Varying>,
    pub start: Option<f64>,
    pub step: Option<f64>,
    pub count: Option<usize>,
    pub preset: Option<Preset>,
    pub taus: Option<Vec<usize>>,
    pub tree: Option<PathBuf>,
    pub grid: Option<usize>,
    pub tail: Option<bool>,
}

macro_rules! overlay {
    ($cli:expr, $cfg:expr; $($field:ident),*) => {
        $( if $cli.$field.is_none() { $cli.$field = $cfg.$field.clone(); } )*
    };
}

impl ConfigFile {
    pub fn fill_common(&self, c: &mut Common) {
        overlay!(c, self; dist, gs, gb, horizon, tau, seed, starts, max_iter, tol, perturb, out);
    }

    pub fn fill_sweep(&self, s: &mut SweepArgs) {
        overlay!(s, self; vary, start, step, count, preset, taus);
    }

    pub fn fill_simulate(&self, s: &mut SimulateArgs) {
        overlay!(s, self; tree, grid, tail);
    }
}
