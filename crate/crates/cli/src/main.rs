//! `barrier`: configuration-driven front end for the double-barrier solver.
//!
//! Exit codes: 0 ok, 1 verification violation, 2 invalid configuration or
//! assumption, 3 numerical failure (search ceiling, root search).

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poisson_barrier::config::{Format, RunConfig};

use crate::commands::{Failure, Outcome, Run};

#[derive(Parser)]
#[command(name = "barrier", version, about = "Optimal periodic-classical barriers for spectrally negative Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for (a*, b*) at every configured r; writes barriers.csv.
    Solve(Common),
    /// Value function of the solved and/or configured pairs on a grid.
    Value(Common),
    /// Solve over the r list and compare value functions across r.
    SweepR(Common),
    /// Monte-Carlo estimate of the NPV and its components.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write per-path totals to sim_paths.csv (runs the paths twice).
        #[arg(long)]
        paths: bool,
    },
    /// QVI audit of a barrier pair; exits 1 on a flagged violation.
    Verify(Common),
    /// Scale functions W, W̄, Z, Zφ at rate q on a grid.
    DumpScale(Common),
    /// Γ(a, ·) and γ(a, ·) curves for several a.
    DumpGamma(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed; overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output formats, comma separated; overrides `output.formats`.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<FormatArg>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
        }
    }
}

fn load(common: &Common) -> Result<Run, Failure> {
    let mut cfg = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = &common.format {
        cfg.output.formats = f.iter().map(|&f| f.into()).collect();
    }
    Run::new(cfg)
}

fn dispatch(cli: Cli) -> Result<Outcome, Failure> {
    match cli.command {
        Command::Solve(c) => commands::solve(&load(&c)?),
        Command::Value(c) => commands::value(&load(&c)?),
        Command::SweepR(c) => commands::sweep_r(&load(&c)?),
        Command::Simulate { common, paths } => commands::simulate(&load(&common)?, paths),
        Command::Verify(c) => commands::verify(&load(&c)?),
        Command::DumpScale(c) => commands::dump_scale(&load(&c)?),
        Command::DumpGamma(c) => commands::dump_gamma(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
