//! `gmclab`: generate base measures and run chaos experiments, emitting
//! versioned JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gmclab", version, about = "Monte Carlo laboratory for Gaussian multiplicative chaos")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML file with default parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Regularization scale (default: chosen from the atom spacing).
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Plot data as CSV.
    #[arg(long, global = true)]
    pub csv_out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Require an explicit seed for randomized commands.
    #[arg(long, global = true)]
    pub test_mode: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Grid,
    Cantor,
    Julia,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IneqKind {
    Fkg,
    Kahane,
    Markov,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    One,
    FieldAt,
    ClippedMass,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a measure CSV (x,y,weight).
    Generate {
        kind: MeasureKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        level: Option<u32>,
        /// Julia parameter, e.g. -1+0i.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long)]
        pixels: Option<usize>,
        #[arg(long)]
        max_iter: Option<u32>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// d-energy of a measure.
    Energy {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        d: Option<f64>,
    },
    /// Bound exponents and thresholds.
    Exponents {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Use β = d, δ = 1.
        #[arg(long)]
        l2: bool,
        /// E_d(σ)/σ(𝔻), for t₀ on the L² branch.
        #[arg(long)]
        energy_ratio: Option<f64>,
        /// Measure to compute the energy ratio from.
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Laplace transform of the total mass.
    Laplace {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Option<Vec<f64>>,
        /// Geometric grid, with --t-max and --t-points, when --t is absent.
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        t_points: Option<usize>,
        /// Attach the bound for this d (with --l2 or --beta/--delta).
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        l2: bool,
    },
    /// Check the negative-moment bound on [t₀, 100 t₀].
    VerifyBound {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        l2: bool,
    },
    /// Rooted identity per replica.
    VerifyIdentity {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        gamma_prime: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Mass-weighted law against the rooted law.
    VerifyChangeOfMeasure {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        gamma_prime: Option<f64>,
        #[arg(long, value_enum)]
        statistic: Option<StatisticKind>,
        #[arg(long)]
        atom: Option<usize>,
        #[arg(long)]
        cap: Option<f64>,
        /// γ of the clipped-mass statistic (default: --gamma-prime).
        #[arg(long)]
        stat_gamma: Option<f64>,
    },
    /// FKG, Kahane, or domain-Markov checks.
    VerifyIneq {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<IneqKind>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        #[arg(long)]
        r_inner: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Half-plane split with mass above a quarter on each side.
    Split {
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Small-ball frequencies P(μ(𝔻) < ε).
    Tail {
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Energy { .. } => "energy",
            Command::Exponents { .. } => "exponents",
            Command::Laplace { .. } => "laplace",
            Command::VerifyBound { .. } => "verify-bound",
            Command::VerifyIdentity { .. } => "verify-identity",
            Command::VerifyChangeOfMeasure { .. } => "verify-change-of-measure",
            Command::VerifyIneq { .. } => "verify-ineq",
            Command::Split { .. } => "split",
            Command::Tail { .. } => "tail",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
