//! Command front end: configuration files, single-instance solves, scenario
//! campaigns with CSV output, and oracle comparisons.
//!
//! Exit codes: 0 feasible, 2 infeasible (or no feasible point found), 1 error.

mod commands;
mod config;

pub use commands::{
    aggregate_row, cmd_experiment, cmd_oracle, cmd_solve, default_out_dir, record_row, Exit, AGGREGATE_HEADER,
    RECORDS_HEADER,
};
pub use config::{ChannelKind, Config, Csi, SweepKind};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{resolve_scenarios, RunOptions};
use crate::par::Execution;
use crate::pccp::LambdaUpdate;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "cfpm",
    version,
    about = "AP selection and precoding for cell-free massive MIMO downlinks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides `scenario.base_seed`.
    #[arg(long, env = "CFPM_SEED")]
    pub seed: Option<u64>,
    /// Residual tolerance for every conic solve.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Use `λ ← max(ρλ, λ_max)` instead of the capped update.
    #[arg(long)]
    pub lambda_literal_max: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one channel realization.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write the precoders of a feasible solution to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-iteration PCCP trace to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a Monte Carlo campaign and write records.csv and aggregate.csv.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Built-in scenario (fig2, fig3, fig4, fig5, fig5_4db, ...); without
        /// it the `scenario.*` keys of the config are used.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory (default `out/<scenario>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the number of runs per sweep value.
        #[arg(long)]
        runs: Option<usize>,
        /// Record per-run wall time (makes records.csv non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Compare PCCP against the exhaustive search over AP subsets (N ≤ 12).
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Print the effective configuration with every default resolved.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(tol) = self.tol {
            cfg.pccp.solver.tol = tol;
        }
        if self.lambda_literal_max {
            cfg.pccp.lambda_update = LambdaUpdate::LiteralMax;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(exit) => exit.code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<Exit> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Solve { common, out, trace } => {
            let cfg = common.load()?;
            cmd_solve(&cfg, cfg.base_seed, out.as_deref(), trace.as_deref(), &mut stdout)
        }
        Command::Experiment {
            common,
            scenario,
            out,
            workers,
            runs,
            timing,
        } => {
            let cfg = common.load()?;
            let mut scenarios = match &scenario {
                Some(name) => resolve_scenarios(name)?,
                None => vec![cfg.scenario()?],
            };
            for s in &mut scenarios {
                if let Some(seed) = common.seed {
                    s.base_seed = seed;
                }
                if let Some(r) = runs {
                    s.runs = r;
                }
                if scenario.is_some() {
                    s.pccp.solver.tol = cfg.pccp.solver.tol;
                    s.pccp.lambda_update = cfg.pccp.lambda_update;
                }
            }
            let name = scenario.unwrap_or_else(|| cfg.scenario_name.clone());
            let out_dir = out.unwrap_or_else(|| default_out_dir(&name));
            let opts = RunOptions {
                execution: Execution::from_workers(workers),
                timing,
                keep_solutions: false,
            };
            cmd_experiment(&scenarios, &out_dir, &opts, &mut std::io::stderr())?;
            Ok(Exit::Feasible)
        }
        Command::Oracle { common } => {
            let cfg = common.load()?;
            cmd_oracle(&cfg, cfg.base_seed, &mut stdout)
        }
        Command::Config { common } => {
            let cfg = common.load()?;
            use std::io::Write;
            stdout.write_all(cfg.to_text().as_bytes()).map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            })?;
            Ok(Exit::Feasible)
        }
    }
}
