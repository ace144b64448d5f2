//! `semidyn`: canonical heights, orbits, local heights and invariant measures
//! from the command line.
//!
//! Exit status: 0 on success, 1 on input errors, 2 when the mathematics
//! refuses the request (no canonical height, exceptional base point, ...).

mod commands;
mod parse;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "semidyn", version, about = "Arithmetic dynamics of several morphisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// System description file (JSON)
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,
    /// Point literal such as "(2:3)", "((2:3),(1:5))" or the affine form "(0,0,0)"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub target_error: f64,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub node_budget: usize,
    #[arg(long, global = true, default_value_t = 64)]
    pub depth_cap: usize,
    /// Bits per coordinate before an exact computation stops
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub digit_budget: u64,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (or file prefix for `measure`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyArg {
    Auto,
    ExactOrbit,
    LocalSeries,
    InvolutionWalk,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetArg {
    /// Laplacian of the grid potential
    Grid,
    /// Normalized arc length on |z| = 1
    Circle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Canonical height with error radius
    Height {
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
        /// Truncate at this depth instead of targeting an error
        #[arg(long)]
        fixed_depth: Option<usize>,
    },
    /// Forward orbit under all compositions
    Orbit,
    /// F-periodicity of --point, or all periodic orbits up to --bound
    Periodic {
        /// Naive height bound B (log scale)
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Local Green function at one place
    Local {
        /// "inf" or a prime
        #[arg(long, default_value = "inf")]
        place: String,
    },
    /// Canonical height as a sum of local terms
    Decompose,
    /// Green potential and equilibrium measure on the Riemann sphere
    Measure {
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
        /// Pointwise pull-back depth of the final pass (0 disables; default by k)
        #[arg(long)]
        sharpen: Option<usize>,
    },
    /// Discrepancy of preimage measures against the equilibrium measure
    Equi {
        /// Base point: "inf", "re" or "re,im"
        #[arg(long, allow_hyphen_values = true)]
        base: String,
        /// Comma-separated depths
        #[arg(long, default_value = "4,6,8")]
        depths: String,
        #[arg(long, value_enum, default_value_t = TargetArg::Grid)]
        target: TargetArg,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        #[arg(long, default_value_t = 30)]
        iterations: usize,
        #[arg(long)]
        sharpen: Option<usize>,
        /// Semicolon-separated exceptional points, e.g. "0;inf"
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        exceptional: String,
    },
    /// t_{2n} table for the binomial current claim
    Claim {
        /// Use λ = 7 + 4√3 with exact arithmetic in ℚ(√3)
        #[arg(long, conflicts_with = "lambda")]
        lambda_default: bool,
        #[arg(long)]
        lambda: Option<f64>,
        /// constant[:c], harmonic, alternating, or values:v0,v1,...;limit
        #[arg(long, default_value = "constant:1")]
        sequence: String,
        #[arg(long, default_value_t = 40)]
        n_max: usize,
    },
    /// Functional equation Σ ĥ(f_i x) = d ĥ(x) at --point or at sampled points
    Check {
        /// Number of sampled points when --point is absent
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Truncate images one level shallower than x
        #[arg(long)]
        aligned: bool,
    },
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn refusal(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().expect("thread pool is configured once");
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let kind = if f.code == 2 { "refused" } else { "error" };
            eprintln!("{kind}: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
