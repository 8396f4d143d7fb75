use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "war", version, about = "Wasserstein autoregressive models for density time series")]
pub struct Cli {
    /// Key = value file supplying defaults for any flag not given.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn raw samples into a quantile series by kernel density estimation.
    Densify(DensifyArgs),
    /// Simulate a WAR(p) density series.
    Simulate(SimulateArgs),
    /// Fit a WAR(p) or FFWAR(p) model to a series.
    Fit(FitArgs),
    /// Forecast densities from a saved fit.
    Forecast(ForecastArgs),
    /// Wasserstein autocorrelation function, optionally with bands.
    Acf(AcfArgs),
    /// Rolling-origin tuning of order and window.
    Backtest(BacktestArgs),
    /// Repeated simulate-and-fit runs.
    Montecarlo(MontecarloArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DensifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Number of subintervals of the probability grid.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    /// `silverman` or a positive number.
    #[arg(long, default_value = "silverman")]
    pub bandwidth: String,
    /// Points of the per-row support grid used for the KDE.
    #[arg(long, default_value_t = 512)]
    pub support_points: usize,
    /// Winsorize samples to `LO:HI` before estimation.
    #[arg(long, value_name = "LO:HI")]
    pub clip: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InnovationKind {
    Constant,
    Linear,
    Sin,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InnovationArgs {
    #[arg(long, value_enum, default_value_t = InnovationKind::Sin)]
    pub innovation: InnovationKind,
    /// Standard deviation of a normal level shift.
    #[arg(long, default_value_t = 1.0, conflicts_with = "eta_uniform")]
    pub eta_sd: f64,
    /// Half-width of a uniform level shift, replacing the normal one.
    #[arg(long)]
    pub eta_uniform: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub delta_bound: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub beta: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub innovation: InnovationArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    War,
    Ffwar,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = ModelKind::War)]
    pub model: ModelKind,
    /// Variance fraction retained by FFWAR.
    #[arg(long, default_value_t = 0.8)]
    pub fraction: f64,
    /// Skip innovation constants and asymptotic covariance.
    #[arg(long)]
    pub no_inference: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 512)]
    pub support_points: usize,
    /// Support grid `LO:HI`; by default the range of the input series
    /// padded by 5%. The grid widens if a forecast falls outside it.
    #[arg(long, value_name = "LO:HI")]
    pub support: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write forecast cdfs to this file.
    #[arg(long)]
    pub cdf_output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct AcfArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub max_lag: usize,
    /// Add 95% bands from the asymptotic covariance of a fitted WAR model.
    #[arg(long)]
    pub ci: bool,
    /// Order of the model used for the bands.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelKind::War)]
    pub model: ModelKind,
    /// Candidate orders: `A:B` or a comma list.
    #[arg(long, default_value = "1:10")]
    pub orders: String,
    #[arg(long, value_delimiter = ',', default_value = "20,62")]
    pub windows: Vec<usize>,
    /// Candidate variance fractions for FFWAR.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.5,0.6,0.7,0.8")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value = "kld")]
    pub metric: String,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MontecarloArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub beta: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub innovation: InnovationArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 100)]
    pub replicates: u64,
    /// Fitted order; defaults to the true order.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub output: PathBuf,
}
