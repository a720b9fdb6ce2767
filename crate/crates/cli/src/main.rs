//! `varcalc` command-line front end.
//!
//! Every subcommand prints one JSON report on stdout. With `--out DIR` the
//! report, any CSV tables and a `manifest.json` are also written to `DIR`.
//! Exit codes: 0 when all asserted checks pass, 1 when the run produced
//! findings, 2 on usage or configuration errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::{Outcome, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "varcalc",
    version,
    about = "Lattice solvers and optimality checks for variational problems"
)]
struct Cli {
    /// Directory for report, tables and manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct LatticeArgs {
    /// Time steps of the direct solver.
    #[arg(short = 'N', long = "steps", default_value_t = 100)]
    pub steps: usize,
    /// States per axis.
    #[arg(long, default_value_t = 801)]
    pub resolution: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct SectionArgs {
    /// Builtin Lagrangian name.
    #[arg(short = 'l', long)]
    pub lagrangian: String,
    /// State at which the section `u -> L(x, u)` is taken.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub u_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub u_max: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct ValueArgs {
    /// Time layers of the value grid.
    #[arg(long, default_value_t = 100)]
    pub layers: usize,
    #[arg(long, default_value_t = 801)]
    pub resolution: usize,
    /// Half-width of the state interval centered at 0.
    #[arg(long, default_value_t = 2.0)]
    pub half_width: f64,
}

#[derive(Subcommand, Debug, Clone, serde::Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// List builtin Lagrangians and terminal costs.
    Catalog,
    /// Solve a Lagrange problem on the state lattice.
    Solve {
        #[arg(short, long)]
        problem: PathBuf,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Lower convex envelope of a Lagrangian section.
    Envelope {
        #[command(flatten)]
        section: SectionArgs,
    },
    /// Legendre-Fenchel conjugate of a Lagrangian section.
    Lft {
        #[command(flatten)]
        section: SectionArgs,
        #[arg(long, default_value_t = 2.0)]
        p_max: f64,
        #[arg(long, default_value_t = 41)]
        p_points: usize,
    },
    /// Du Bois-Reymond / Erdmann check along the lattice minimizer.
    Dbr {
        #[arg(short, long)]
        problem: PathBuf,
        /// erdmann, convex, subdiff, clarke or superdiff.
        #[arg(long)]
        variant: String,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// A priori Lipschitz bound and its check on the lattice minimizer.
    Bound {
        #[arg(short, long)]
        problem: PathBuf,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Bolza value function on a (t, x) grid.
    Value {
        #[arg(short, long)]
        problem: PathBuf,
        #[command(flatten)]
        grid: ValueArgs,
    },
    /// Hamilton-Jacobi inequalities for the value function.
    Hj {
        #[arg(short, long)]
        problem: PathBuf,
        #[command(flatten)]
        grid: ValueArgs,
    },
    /// Differential-inclusion test of the value-grid minimizer.
    Inclusion {
        #[arg(short, long)]
        problem: PathBuf,
        #[command(flatten)]
        grid: ValueArgs,
    },
}

fn threads() -> Result<Option<usize>, RunError> {
    match std::env::var("VARCALC_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Usage(format!(
                "VARCALC_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

fn run(cli: &Cli) -> Result<Outcome, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::Usage(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let mut outcome = pool.install(|| commands::dispatch(&cli.command))?;
    if let Some(dir) = &cli.out {
        manifest::write_outputs(
            dir,
            &cli.command,
            &mut outcome,
            started.elapsed().as_secs_f64(),
        )?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            eprintln!(
                "error: {}",
                msg.lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
            );
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.report);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
