//! Wasserstein autoregressive models for time series of univariate
//! probability densities.
//!
//! Every distribution is carried as a quantile function on a fixed
//! probability grid. In those coordinates the 2-Wasserstein geometry is
//! flat, so estimation, forecasting and simulation reduce to linear
//! operations on quantile curves.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below name the common instantiations.

pub mod error;
pub mod ffwar;
pub mod forecast;
pub mod grid;
pub mod io;
pub mod kde;
pub mod linalg;
pub mod metrics;
pub mod scalar;
pub mod select;
pub mod simulate;
pub mod war;
pub mod wasserstein;

pub use error::{Result, WarError};
pub use ffwar::{fit_ffwar, forecast_ffwar, fpca, FfwarFit, FpcaBasis};
pub use forecast::{forecast_multi, forecast_one, on_common_grid, DistributionForecast};
pub use grid::{
    cdf_to_quantile, density_from_cdf, density_to_quantile, integrate, quantile_to_density,
    DensityFn, DensitySeries, Grid, GridKind, QuantileFn,
};
pub use kde::{kde_estimate, Bandwidth};
pub use metrics::{evaluate_metric, MetricTag};
pub use scalar::Scalar;
pub use select::{
    rolling_backtest, select_ffwar, select_order_window, BacktestScore, ModelSpec, Selection,
};
pub use simulate::{
    draw_innovation, simulate_war, validate_compatibility, EtaDist, InnovationModel, SimConfig,
};
pub use war::{
    acf_asymptotic_covariance, asymptotic_covariance, autocov_traces, check_causality,
    estimate_innovation_stats, fit_war, psi_weights, wasserstein_acf, AutocovTrace,
    InnovationStats, WarFit,
};
pub use wasserstein::{
    exp_map, frechet_mean, log_map, wasserstein_distance, wasserstein_variance, TangentField,
};

pub type Grid64 = Grid<f64>;
pub type DensityFn64 = DensityFn<f64>;
pub type QuantileFn64 = QuantileFn<f64>;
pub type DensitySeries64 = DensitySeries<f64>;
pub type TangentField64 = TangentField<f64>;
pub type WarFit64 = WarFit<f64>;
pub type FfwarFit64 = FfwarFit<f64>;
pub type DistributionForecast64 = DistributionForecast<f64>;
pub type SimConfig64 = SimConfig<f64>;

pub type Grid32 = Grid<f32>;
pub type DensityFn32 = DensityFn<f32>;
pub type QuantileFn32 = QuantileFn<f32>;
pub type DensitySeries32 = DensitySeries<f32>;
pub type WarFit32 = WarFit<f32>;
pub type SimConfig32 = SimConfig<f32>;
