//! Rolling-origin backtests and data-driven choice of order, window and
//! FPCA variance fraction.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, WarError};
use crate::ffwar::{ffwar_transport, fit_ffwar};
use crate::forecast::{forecast_from_transport, forecast_transport, SUPPORT_PAD};
use crate::grid::{extended_range, padded_support, quantile_to_density, DensityFn, DensitySeries, QuantileFn};
use crate::metrics::{evaluate_metric, MetricTag};
use crate::scalar::{sum, Scalar};
use crate::war::{fit_war_or_mean, FitOptions};

/// Points of the support grid built for each backtest step.
pub const BACKTEST_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec<T: Scalar> {
    War,
    /// Fully functional model with FPCA variance fraction `r`.
    Ffwar { r: T },
}

impl<T: Scalar> ModelSpec<T> {
    pub fn method(&self) -> &'static str {
        match self {
            ModelSpec::War => "war",
            ModelSpec::Ffwar { .. } => "ffwar",
        }
    }

    pub fn fraction(&self) -> Option<T> {
        match *self {
            ModelSpec::War => None,
            ModelSpec::Ffwar { r } => Some(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestScore<T: Scalar> {
    pub spec: ModelSpec<T>,
    pub metric: MetricTag,
    pub p: usize,
    pub k: usize,
    /// Sum of `losses`.
    pub score: T,
    pub losses: Vec<T>,
    /// One entry per failed step or per infeasible cell.
    pub diagnostics: Vec<String>,
}

impl<T: Scalar> BacktestScore<T> {
    fn infeasible(spec: ModelSpec<T>, metric: MetricTag, p: usize, k: usize, why: String) -> Self {
        BacktestScore {
            spec,
            metric,
            p,
            k,
            score: T::infinity(),
            losses: Vec::new(),
            diagnostics: vec![why],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.score.is_finite()
    }
}

/// A tuning cell of a backtest sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T: Scalar> {
    pub spec: ModelSpec<T>,
    pub p: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T: Scalar> {
    pub p: usize,
    pub k: usize,
    pub r: Option<T>,
    pub score: T,
    /// Every evaluated cell, ordered by `(k, p)` or `(r, k)`.
    pub table: Vec<BacktestScore<T>>,
}

/// Forecast and realized densities of one step on a common grid.
fn step_densities<T: Scalar>(
    window: &DensitySeries<T>,
    realized: &QuantileFn<T>,
    spec: ModelSpec<T>,
    p: usize,
) -> Result<(DensityFn<T>, DensityFn<T>)> {
    let transport = match spec {
        ModelSpec::War => {
            let fit = fit_war_or_mean(window, p, FitOptions { inference: false })?;
            let n = window.len();
            let lags: Vec<&[T]> = (0..fit.order).map(|i| window.get(n - 1 - i).values()).collect();
            forecast_transport(&fit, &lags)
        }
        ModelSpec::Ffwar { r } => {
            let fit = fit_ffwar(window, p, r)?;
            ffwar_transport(&fit, window)?
        }
    };
    let s = window.grid().points();
    let (a, b) = extended_range(s, &transport);
    let (c, d) = extended_range(s, realized.values());
    let grid = Arc::new(padded_support(
        a.min(c),
        b.max(d),
        T::lit(SUPPORT_PAD),
        BACKTEST_GRID_POINTS,
    )?);
    let fc = forecast_from_transport(window.grid(), transport, &grid, 1)?;
    let truth = quantile_to_density(realized, &grid)?;
    Ok((fc.density, truth))
}

fn check_history(n: usize, p: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(WarError::InvalidArgument("window must be at least 1".into()));
    }
    if n < 2 * k + p {
        return Err(WarError::InsufficientData(format!(
            "backtest with K = {k}, p = {p} needs {} observations, got {n}",
            2 * k + p
        )));
    }
    Ok(())
}

/// Backtest of one cell under several metrics. The model is refitted on
/// `[t - K, t - 1]` for every evaluation point `t` in the last `K`
/// observations. Failed steps score `+inf` and leave a diagnostic.
pub fn rolling_backtest_metrics<T: Scalar>(
    series: &DensitySeries<T>,
    spec: ModelSpec<T>,
    metrics: &[MetricTag],
    p: usize,
    k: usize,
) -> Result<Vec<BacktestScore<T>>> {
    let n = series.len();
    check_history(n, p, k)?;
    let steps: Vec<std::result::Result<Vec<T>, String>> = (n - k..n)
        .into_par_iter()
        .map(|t| {
            let window = series.window(t - k, t).map_err(|e| e.to_string())?;
            let (f, g) = step_densities(&window, series.get(t), spec, p)
                .map_err(|e| format!("t = {}: {e}", t + 1))?;
            metrics
                .iter()
                .map(|&m| evaluate_metric(m, &f, &g).map_err(|e| format!("t = {}: {e}", t + 1)))
                .collect()
        })
        .collect();
    Ok(metrics
        .iter()
        .enumerate()
        .map(|(i, &metric)| {
            let mut diagnostics = Vec::new();
            let losses: Vec<T> = steps
                .iter()
                .map(|r| match r {
                    Ok(v) => v[i],
                    Err(e) => {
                        diagnostics.push(e.clone());
                        T::infinity()
                    }
                })
                .collect();
            BacktestScore {
                spec,
                metric,
                p,
                k,
                score: sum(losses.iter().copied()),
                losses,
                diagnostics,
            }
        })
        .collect())
}

pub fn rolling_backtest<T: Scalar>(
    series: &DensitySeries<T>,
    spec: ModelSpec<T>,
    metric: MetricTag,
    p: usize,
    k: usize,
) -> Result<BacktestScore<T>> {
    Ok(rolling_backtest_metrics(series, spec, &[metric], p, k)?.remove(0))
}

/// Backtests every cell under every metric; infeasible cells get `+inf`
/// scores. Output is indexed `[cell][metric]`.
pub fn backtest_cells<T: Scalar>(
    series: &DensitySeries<T>,
    cells: &[Cell<T>],
    metrics: &[MetricTag],
) -> Vec<Vec<BacktestScore<T>>> {
    cells
        .par_iter()
        .map(|c| match rolling_backtest_metrics(series, c.spec, metrics, c.p, c.k) {
            Ok(s) => s,
            Err(e) => metrics
                .iter()
                .map(|&m| BacktestScore::infeasible(c.spec, m, c.p, c.k, e.to_string()))
                .collect(),
        })
        .collect()
}

fn sorted_unique(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Argmin over finite scores; the first of equal scores wins.
fn argmin<'a, T: Scalar>(cands: impl Iterator<Item = &'a BacktestScore<T>>) -> Option<&'a BacktestScore<T>> {
    cands
        .filter(|s| s.is_finite())
        .fold(None, |best: Option<&BacktestScore<T>>, s| match best {
            Some(b) if b.score <= s.score => Some(b),
            _ => Some(s),
        })
}

/// Two-stage choice: `K` with `p = 1`, then `p` at that `K`. Ties go to the
/// smaller `K`, then the smaller `p`.
pub fn select_order_window<T: Scalar>(
    series: &DensitySeries<T>,
    orders: &[usize],
    windows: &[usize],
    metric: MetricTag,
) -> Result<Selection<T>> {
    if orders.is_empty() || windows.is_empty() {
        return Err(WarError::InvalidArgument("candidate sets must be nonempty".into()));
    }
    let ks = sorted_unique(windows);
    let mut ps = sorted_unique(orders);
    let stage_ps = ps.clone();
    if !ps.contains(&1) {
        ps.insert(0, 1);
    }
    let cells: Vec<Cell<T>> = ks
        .iter()
        .flat_map(|&k| ps.iter().map(move |&p| Cell { spec: ModelSpec::War, p, k }))
        .collect();
    let table: Vec<BacktestScore<T>> = backtest_cells(series, &cells, &[metric])
        .into_iter()
        .map(|mut v| v.remove(0))
        .collect();
    let k_hat = argmin(table.iter().filter(|s| s.p == 1))
        .ok_or(WarError::NoFeasibleCandidate)?
        .k;
    let best = argmin(table.iter().filter(|s| s.k == k_hat && stage_ps.contains(&s.p)))
        .ok_or(WarError::NoFeasibleCandidate)?;
    Ok(Selection {
        p: best.p,
        k: k_hat,
        r: None,
        score: best.score,
        table: table.clone(),
    })
}

/// Joint choice of `(R, K)` for the fully functional model with `p = 1`.
/// Ties go to the smaller `R`, then the smaller `K`.
pub fn select_ffwar<T: Scalar>(
    series: &DensitySeries<T>,
    fractions: &[T],
    windows: &[usize],
    metric: MetricTag,
) -> Result<Selection<T>> {
    if fractions.is_empty() || windows.is_empty() {
        return Err(WarError::InvalidArgument("candidate sets must be nonempty".into()));
    }
    let ks = sorted_unique(windows);
    let mut rs = fractions.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rs.dedup();
    let cells: Vec<Cell<T>> = rs
        .iter()
        .flat_map(|&r| ks.iter().map(move |&k| Cell { spec: ModelSpec::Ffwar { r }, p: 1, k }))
        .collect();
    let table: Vec<BacktestScore<T>> = backtest_cells(series, &cells, &[metric])
        .into_iter()
        .map(|mut v| v.remove(0))
        .collect();
    let best = argmin(table.iter()).ok_or(WarError::NoFeasibleCandidate)?;
    Ok(Selection {
        p: 1,
        k: best.k,
        r: best.spec.fraction(),
        score: best.score,
        table: table.clone(),
    })
}
