//! Batch front-end: scenario ingestion, solve/convergence/transient/check
//! subcommands, artifact emission.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 solver
//! failure, 4 property-suite failure.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faultflow_core::system::{CouplingMode, SolverKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "faultflow",
    version,
    about = "Darcy flow in porous media with a through-going fault"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one steady scenario and write VTK/CSV artifacts.
    Run(CommonArgs),
    /// Run the refinement ladder against a fine reference and write the
    /// error history.
    Convergence(CommonArgs),
    /// Run the transient schedule, one VTK file per step.
    Transient(CommonArgs),
    /// Execute the structural property suites.
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fault coupling mode (default: virtual).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Linear solver override.
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Reduced,
    Virtual,
}

impl ModeArg {
    fn mode(self) -> CouplingMode {
        match self {
            ModeArg::Reduced => CouplingMode::Reduced,
            ModeArg::Virtual => CouplingMode::Virtual,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum SolverArg {
    Direct,
    Gmres,
}

impl SolverArg {
    fn kind(self) -> SolverKind {
        match self {
            SolverArg::Direct => SolverKind::Direct,
            SolverArg::Gmres => SolverKind::Gmres,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(args) => commands::cmd_run(args),
        Cmd::Convergence(args) => commands::cmd_convergence(args),
        Cmd::Transient(args) => commands::cmd_transient(args),
        Cmd::Check(args) => commands::cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
