//! Command-line front end: JSON instance and solution files, the `solve`,
//! `exact`, `gen` and `bench` subcommands, and their exit codes.

pub mod commands;
pub mod error;
pub mod format;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use contclust_core::metric::Norm;

use crate::commands::{ProblemChoice, SolveFlags};
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "contclust", version, about = "Round-or-cut solvers for continuous clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print the solution document.
    Solve {
        instance: PathBuf,
        /// Write the solution here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-guess search trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        flags: FlagArgs,
    },
    /// Brute-force optimum over every candidate point.
    Exact { instance: PathBuf },
    /// Generate an instance document.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Solve every `*.json` instance of a directory and print a CSV table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        flags: FlagArgs,
    },
}

#[derive(Debug, Args, Clone, Copy)]
pub struct FlagArgs {
    /// Relative radius mesh step.
    #[arg(long)]
    pub eps_grid: Option<f64>,
    /// Absolute radius mesh step.
    #[arg(long)]
    pub eps_abs: Option<f64>,
    /// Iterations per guess are capped at this factor times n times the grid size.
    #[arg(long)]
    pub cap_factor: Option<usize>,
}

impl From<FlagArgs> for SolveFlags {
    fn from(a: FlagArgs) -> Self {
        SolveFlags {
            eps_grid: a.eps_grid,
            eps_abs: a.eps_abs,
            cap_factor: a.cap_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    #[value(name = "1")]
    L1,
    #[value(name = "2")]
    L2,
    #[value(name = "inf")]
    Inf,
}

impl From<NormArg> for Norm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::L1 => Norm::L1,
            NormArg::L2 => Norm::L2,
            NormArg::Inf => Norm::LInf,
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct ProblemArgs {
    /// ufl, fair_kmedian, kp or kcwo.
    #[arg(long, default_value = "ufl")]
    pub problem: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub p: u32,
    /// Clients to serve (kcwo); defaults to all.
    #[arg(long)]
    pub m: Option<usize>,
    /// Common radius limit (fair_kmedian); defaults to none.
    #[arg(long)]
    pub radius: Option<f64>,
}

impl From<&ProblemArgs> for ProblemChoice {
    fn from(a: &ProblemArgs) -> Self {
        ProblemChoice {
            kind: a.problem.clone(),
            lambda: a.lambda,
            k: a.k,
            p: a.p,
            m: a.m,
            radius: a.radius,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Uniform points in the unit cube; the first `n` are clients.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, value_enum, default_value = "2")]
        norm: NormArg,
        /// Extra candidate center points.
        #[arg(long, default_value_t = 0)]
        extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Euclidean points scattered around random cluster seeds.
    Euclidean {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 0.05)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        extra: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// ℓ∞ embedding of a graph given as `u v` edge lines.
    Hardness {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
}

fn write_to(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs a parsed command, writing its document to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    let text = match cli.command {
        Command::Solve {
            instance,
            out: dest,
            trace,
            flags,
        } => {
            let file = commands::load(&instance)?;
            let (sol, search) = commands::solve_file(&file, &flags.into())?;
            if let Some(t) = trace {
                write_to(&t, &search.trace.to_csv())?;
            }
            let json = sol.to_json() + "\n";
            match dest {
                Some(d) => {
                    write_to(&d, &json)?;
                    String::new()
                }
                None => json,
            }
        }
        Command::Exact { instance } => {
            let file = commands::load(&instance)?;
            let r = commands::exact_file(&file)?;
            serde_json::to_string_pretty(&r).expect("plain data serializes") + "\n"
        }
        Command::Gen { kind } => {
            let file = match kind {
                GenKind::Random {
                    n,
                    dim,
                    norm,
                    extra,
                    seed,
                    problem,
                } => commands::gen_random(n, dim, norm.into(), extra, seed, &(&problem).into())?,
                GenKind::Euclidean {
                    n,
                    dim,
                    clusters,
                    spread,
                    extra,
                    seed,
                    problem,
                } => commands::gen_euclidean(n, dim, clusters, spread, extra, seed, &(&problem).into())?,
                GenKind::Hardness { graph, eps } => commands::gen_hardness(&graph, eps)?,
            };
            file.to_json() + "\n"
        }
        Command::Bench { dir, flags } => {
            let rows = commands::bench(&dir, &flags.into())?;
            commands::bench_csv(&rows)
        }
    };
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}
