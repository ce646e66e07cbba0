use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "fracnoise",
    version,
    about = "Roughness, volatility and noise estimation for noisy fractional processes"
)]
pub struct Cli {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: logical cores)
    #[arg(long, global = true, env = "FRACNOISE_THREADS", hide_env_values = true)]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug, -vvv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a noisy path and write it as a time,value CSV
    Simulate(SimulateArgs),
    /// Estimate H, integrated volatility and noise variance from a path CSV
    Estimate(EstimateArgs),
    /// Run the Monte-Carlo study and write the bias/SE/RMSE table as CSV
    Mc(McArgs),
    /// Frequency sweep of a sampled series with block-wise estimation
    Analyze(AnalyzeArgs),
    /// Print the constants Γ^H_r, η(g) and μ_f
    Constants(ConstantsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum NoiseArg {
    Gaussian,
    Rademacher,
    UniformCentered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KernelArg {
    StationaryFbm,
    RiemannLiouville,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridArg {
    /// H ∈ {0.1, 0.2, 0.3, 1/3, 0.4, …, 0.9}
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    #[default]
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum TestFunctionArg {
    /// f(x, y) = x²
    #[default]
    Square,
    /// F(x, y) = x² − y/2
    SquareMinusHalfY,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimationArgs {
    /// Window scale θ in k = n^κ/θ
    #[arg(long)]
    pub theta: Option<f64>,
    /// Starting window exponent of the adaptive loop
    #[arg(long)]
    pub kappa_init: Option<f64>,
    /// Stop once successive Ĥ differ by at most this
    #[arg(long)]
    pub conv_threshold: Option<f64>,
    /// Maximum number of Ĥ evaluations
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Lower clamp on Ĥ when choosing windows
    #[arg(long)]
    pub h_min: Option<f64>,
    /// Upper clamp on Ĥ when choosing windows
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Skip the adaptive loop and use this κ once
    #[arg(long)]
    pub fixed_kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Input CSV: one value column, or timestamp and value columns
    pub input: PathBuf,
    /// Sample spacing in seconds (required without a timestamp column)
    #[arg(long)]
    pub dt: Option<f64>,
    /// Name of the value column
    #[arg(long)]
    pub value_col: Option<String>,
    /// Name of the timestamp column
    #[arg(long)]
    pub timestamp_col: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Hurst parameter in (0, 1)
    #[arg(long)]
    pub h: Option<f64>,
    /// Observations per unit time
    #[arg(long)]
    pub n: Option<usize>,
    /// Time horizon
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Volatility: a constant, or TIME:VALUE pairs such as 0:1,0.5:2
    #[arg(long, value_name = "SCHEDULE")]
    pub sigma: Option<String>,
    /// Noise level: a constant, or TIME:VALUE pairs
    #[arg(long, value_name = "SCHEDULE")]
    pub rho: Option<String>,
    #[arg(long, value_enum)]
    pub noise_dist: Option<NoiseArg>,
    /// Initial level
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Constant drift
    #[arg(long, allow_hyphen_values = true)]
    pub drift: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (default: standard output)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Horizon in path time units (default: the whole path)
    #[arg(long)]
    pub t_end: Option<f64>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Output format [default: text]
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file (default: standard output)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McArgs {
    /// Predefined list of H values
    #[arg(long, value_enum, conflicts_with = "h")]
    pub grid: Option<GridArg>,
    /// Comma-separated H values
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    /// Replications per H
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observations per unit time
    #[arg(long)]
    pub n: Option<usize>,
    /// Time horizon
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Volatility: a constant, or TIME:VALUE pairs
    #[arg(long, value_name = "SCHEDULE")]
    pub sigma: Option<String>,
    /// Noise level: a constant, or TIME:VALUE pairs
    #[arg(long, value_name = "SCHEDULE")]
    pub rho: Option<String>,
    #[arg(long, value_enum)]
    pub noise_dist: Option<NoiseArg>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<TableFormat>,
    /// Output file (default: standard output)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated target spacings in seconds
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Block length in seconds
    #[arg(long)]
    pub block_length: Option<f64>,
    /// Estimate without pre-averaging (κ = 0) in the main section
    #[arg(long)]
    pub no_preavg: bool,
    /// Add a κ = 0 baseline section to the report
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// JSON report file (default: standard output)
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Also write per-block rows as CSV
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConstantsArgs {
    /// Print Γ^H_r (needs --h and --r)
    #[arg(long)]
    pub gamma: bool,
    /// Print η(g) (needs --h; adds the discrete sum when --k is given)
    #[arg(long)]
    pub eta: bool,
    /// Print μ_f(v1, v2) (needs --v1 and --v2)
    #[arg(long)]
    pub mu: bool,
    /// Weight function
    #[arg(long, default_value = "triangular")]
    pub g: String,
    /// Hurst parameter
    #[arg(long)]
    pub h: Option<f64>,
    /// Window size for the discrete η sum
    #[arg(long)]
    pub k: Option<usize>,
    /// Lag for Γ^H_r
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub v1: Option<f64>,
    #[arg(long)]
    pub v2: Option<f64>,
    /// Test function for μ_f
    #[arg(long, value_enum, default_value = "square")]
    pub f: TestFunctionArg,
}
