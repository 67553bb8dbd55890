mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renormlab::Error;

/// Trees, weights, operators and renormings at desk scale.
#[derive(Debug, Parser)]
#[command(name = "renormlab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Report file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sample-parallel work.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Node cap for unfoldings (overrides RENORMLAB_NODE_BUDGET).
    #[arg(long, global = true)]
    pub node_budget: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct TreeArgs {
    /// Presentation, finite tree, or a report carrying `results.tree`.
    #[arg(long)]
    pub tree: PathBuf,
    /// Weight file; defaults to the `rho` values embedded in the presentation.
    #[arg(long)]
    pub rho: Option<PathBuf>,
    /// Occurrences of a class allowed on a root path when unfolding.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Copies per ω-edge when unfolding.
    #[arg(long, default_value_t = 2)]
    pub copies: usize,
}

#[derive(Debug, Args, Clone)]
pub struct FnArgs {
    /// Function values in node order, e.g. `1,-1/2,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// JSON array of `"p/q"` values.
    #[arg(long = "f")]
    pub f: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes a generated presentation or finite tree.
    Generate {
        /// chain | kary | dyadic | comb | star | lambda | random-tree | random-presentation
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        h: Option<usize>,
        /// Label bound for lambda.
        #[arg(long = "N")]
        labels: Option<usize>,
        /// none | pairs | dyadic (lambda only).
        #[arg(long, default_value = "none")]
        augment: String,
        #[arg(long)]
        cyclic: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Point classification and theorem conditions.
    Classify {
        #[command(flatten)]
        tree: TreeArgs,
        /// Exit 1 unless this theorem's conditions hold (T4_1 … T8_1).
        #[arg(long)]
        require: Option<String>,
    },
    /// Evaluates a named norm.
    Norm {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        name: String,
        #[command(flatten)]
        f: FnArgs,
    },
    /// Applies an operator: R | S | T_special | T_dyadic | rs_rank | bump | reconstruct.
    Operator {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        name: String,
        #[command(flatten)]
        f: FnArgs,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        /// Threshold for `reconstruct`.
        #[arg(long)]
        eps: Option<String>,
    },
    /// Runs a probe: choquet_game | strict_convexity | mlur | smoothness | mu | kadec | reverse_convergence | doubly_bad.
    Probe {
        #[arg(long)]
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        rho: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        copies: usize,
        /// Norm used by norm-based probes.
        #[arg(long, default_value = "sup")]
        norm: String,
        /// Sample or evaluation budget.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        /// Independent plays (seeds `seed..seed+plays`) for the game.
        #[arg(long, default_value_t = 1)]
        plays: usize,
        #[arg(long, default_value = "all")]
        strategy: String,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Copy schedule for the sequence probes, e.g. `1,2,4,8`.
        #[arg(long, default_value = "1,2,4,8")]
        schedule: String,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long = "N")]
        labels: Option<usize>,
        /// Node index for `mu`.
        #[arg(long, default_value_t = 0)]
        node: usize,
        #[command(flatten)]
        f: FnArgs,
    },
    /// Plays the Choquet game, either against built-in β strategies or
    /// replaying β's moves from a file.
    Game {
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value = "all")]
        strategy: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        plays: usize,
        /// JSON array of `{"t": [labels], "p": n}` moves for β.
        #[arg(long)]
        moves: Option<PathBuf>,
    },
    /// Semantic diff of two reports.
    ReportDiff { a: PathBuf, b: PathBuf },
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVARIANT: u8 = 1;
    pub const BUDGET: u8 = 2;
    pub const INPUT: u8 = 3;
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::SizeBudgetExceeded { .. } | Error::BudgetExceeded(_) => exit::BUDGET,
        Error::NonContraction(_) => exit::INVARIANT,
        _ => exit::INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("renormlab: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
