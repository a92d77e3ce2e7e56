use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{exact_only, run, Outcome};
use crate::config::{Mode, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pgpr", version, about = "Landscape-fit error mitigation experiments for a two-qubit embedding VQE")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare optimizers on standalone embedding problems over a U grid.
    EhScan(RunArgs),
    /// Self-consistent Z(U) and double occupancy per embedding solver.
    RisbScan(RunArgs),
    /// Dump the exact and fitted energy landscape on a grid.
    Landscape(RunArgs),
    /// Readout calibration, raw counts and a mitigation check.
    Calibrate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Noiseless reference computations only.
    #[arg(long)]
    pub exact_only: bool,
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::EhScan(a) => (Mode::EhScan, a),
            Command::RisbScan(a) => (Mode::RisbScan, a),
            Command::Landscape(a) => (Mode::Landscape, a),
            Command::Calibrate(a) => (Mode::Calibrate, a),
        }
    }
}

/// Builds the effective configuration for a parsed command line.
pub fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let (mode, args) = command.split();
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(mode, path)?,
        None => RunConfig::defaults(mode),
    };
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if args.exact_only {
        exact_only(&mut cfg);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `argv`, runs, reports, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match resolve(cli.command).and_then(|cfg| run(&cfg)) {
        Ok(Outcome { files, not_converged }) => {
            for f in &files {
                println!("{}", f.display());
            }
            if not_converged > 0 {
                let e = CliError::NotConverged { count: not_converged };
                eprintln!("error: {e}");
                e.exit_code()
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
