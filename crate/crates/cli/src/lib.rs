//! Command-line front end for abspec.

pub mod checks;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;

use abspec_core::{Error, Execution};
use clap::{Parser, Subcommand};

use crate::commands::SolveFlags;
use crate::config::{ConfigArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "abspec", version, about = "Aharonov-Bohm eigenvalue experiments with a moving pole")]
pub struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form eigenvalues of the unit disk with a centered pole.
    Oracle {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Lowest eigenpairs for one pole position.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write two-column .dat files.
        #[arg(long)]
        emit_plots: bool,
        /// Write the assembled stiffness and mass matrices.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Pole sweep along a direction with the invariant report.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        emit_plots: bool,
    },
    /// Limit profile and its convergence constant.
    Profile {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also solve with twice the truncation radius.
        #[arg(long)]
        check_doubling: bool,
    },
    /// Generate and export a mesh.
    Mesh {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

/// Exit status for an error: 2 for usage and configuration problems, 3 for
/// violated mathematical preconditions, 4 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidInput(_)
        | Error::PoleOutside(_)
        | Error::PoleNearBoundary { .. }
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::InsufficientSamples(_)
        | Error::CircleOutside { .. }
        | Error::Dimension(_) => 2,
        Error::NotSimple { .. }
        | Error::AmbiguousPhase(_)
        | Error::DegenerateElement(_)
        | Error::DegenerateField
        | Error::NonPositiveH(_)
        | Error::RDependence { .. }
        | Error::OnCut(_)
        | Error::OutsideMesh(_)
        | Error::UnderResolved { .. }
        | Error::NoRadii => 3,
        _ => 4,
    }
}

fn execution(jobs: Option<usize>) -> Execution {
    match jobs {
        Some(1) => Execution::Sequential,
        Some(n) => {
            abspec_core::par::configure_threads(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let exec = execution(cli.jobs);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Oracle { alpha, count } => commands::cmd_oracle(*alpha, *count, &mut out),
        Command::Solve { cfg, emit_plots, dump_matrices } => RunConfig::resolve(cfg).and_then(|c| {
            commands::cmd_solve(&c, SolveFlags { emit_plots: *emit_plots, dump_matrices: *dump_matrices }, exec, &mut out)
        }),
        Command::Sweep { cfg, emit_plots } => {
            RunConfig::resolve(cfg).and_then(|c| commands::cmd_sweep(&c, *emit_plots, exec, &mut out).map(|_| ()))
        }
        Command::Profile { cfg, check_doubling } => {
            RunConfig::resolve(cfg).and_then(|c| commands::cmd_profile(&c, *check_doubling, exec, &mut out))
        }
        Command::Mesh { cfg } => RunConfig::resolve(cfg).and_then(|c| commands::cmd_mesh(&c, &mut out)),
    };
    let _ = out.flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
