//! `conehj`: configuration-driven experiments for the cone Hamilton-Jacobi solvers.
//!
//! Exit codes: 0 success, 1 property or hypothesis failure, 2 config error, 3 solver error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod fault;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Report;
use crate::config::{ExperimentConfig, Fault, Overrides};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "conehj",
    version,
    about = "Hamilton-Jacobi equations on the cone of non-negative measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the lower bound and non-negative definiteness of the kernel.
    ValidateKernel(Common),
    /// Evaluate the grid and/or Hopf-Lax routes at the configured times.
    Solve(Common),
    /// Solve the Hopf-Lax problem on measures and report maximizers.
    HopfLax(Common),
    /// Convergence in K, plus optional R-independence and kernel-shift reports.
    Converge(Common),
    /// Run the property suite at the configured seeds.
    Invariants {
        #[command(flatten)]
        common: Common,
        /// Replace the Hamiltonian with a deliberately broken one.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    config: PathBuf,
    /// Times, comma separated.
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    t: Option<Vec<f64>>,
    /// Scale; replaces K and K_range.
    #[arg(long = "K")]
    k: Option<u32>,
    #[arg(long = "R", allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let ov = Overrides {
            times: self.t.clone(),
            k: self.k,
            r: self.r,
            seed: self.seed,
            out: self.out.clone(),
        };
        ExperimentConfig::load(&self.config, &ov)
    }
}

fn run(cli: &Cli) -> Result<(Report, ExperimentConfig), CliError> {
    let (common, fault) = match &cli.command {
        Command::ValidateKernel(c)
        | Command::Solve(c)
        | Command::HopfLax(c)
        | Command::Converge(c) => (c, None),
        Command::Invariants {
            common,
            inject_fault,
        } => (common, *inject_fault),
    };
    let cfg = common.load()?;
    let report = match &cli.command {
        Command::ValidateKernel(_) => commands::validate_kernel(&cfg)?,
        Command::Solve(_) => commands::solve_cmd(&cfg)?,
        Command::HopfLax(_) => commands::hopf_lax_cmd(&cfg)?,
        Command::Converge(_) => commands::converge(&cfg)?,
        Command::Invariants { .. } => commands::invariants(&cfg, fault)?,
    };
    Ok((report, cfg))
}

fn write_files(report: &Report, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let Some(dir) = &cfg.output.dir else {
        return Ok(());
    };
    let io = |path: &std::path::Path, source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for (name, body) in &report.files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|(report, cfg)| {
        write_files(&report, &cfg)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            print!("{}", report.stdout);
            for m in &report.messages {
                eprintln!("{m}");
            }
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
