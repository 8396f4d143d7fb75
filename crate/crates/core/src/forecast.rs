//! One- and multi-step density forecasts from a fitted WAR(p) model.

use std::sync::Arc;

use crate::error::{Result, WarError};
use crate::grid::{
    cdf_to_quantile, check_covers, density_from_cdf, extended_range, is_nondecreasing,
    padded_support, DensityFn, DensitySeries, Grid, GridKind, QuantileFn,
};
use crate::scalar::Scalar;
use crate::war::WarFit;
use crate::wasserstein::pushforward_cdf;

/// Padding applied when the requested support grid must be widened.
pub const SUPPORT_PAD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionForecast<T: Scalar> {
    pub horizon: usize,
    /// Forecast quantile; present when the transport is monotone.
    pub quantile: Option<QuantileFn<T>>,
    /// `V + Q_mean` on the probability grid.
    pub transport: Vec<T>,
    /// Cdf on the support grid of `density`.
    pub cdf: Vec<T>,
    pub density: DensityFn<T>,
    pub monotone_transport: bool,
}

impl<T: Scalar> DistributionForecast<T> {
    pub fn u_grid(&self) -> &Arc<Grid<T>> {
        self.density.grid()
    }
}

/// `Q_mean + sum_i beta_i (lags[i] - Q_mean)`; `lags[0]` is the most
/// recent observation.
pub fn forecast_transport<T: Scalar>(fit: &WarFit<T>, lags: &[&[T]]) -> Vec<T> {
    let mean = fit.mean_quantile.values();
    let mut v = vec![T::zero(); mean.len()];
    for (&b, lag) in fit.beta.iter().zip(lags) {
        for ((vi, &q), &m) in v.iter_mut().zip(lag.iter()).zip(mean) {
            *vi += b * (q - m);
        }
    }
    v.iter().zip(mean).map(|(&a, &m)| m + a).collect()
}

/// Support grid guaranteed to cover the pushforward of `transport`: the
/// requested grid when it already does, otherwise a uniform grid of the
/// same size over the padded range.
pub fn covering_grid<T: Scalar>(
    s_grid: &Grid<T>,
    transport: &[T],
    u_grid: &Arc<Grid<T>>,
) -> Result<Arc<Grid<T>>> {
    let (lo, hi) = extended_range(s_grid.points(), transport);
    if check_covers(u_grid, lo, hi).is_ok() {
        Ok(u_grid.clone())
    } else {
        Ok(Arc::new(padded_support(lo, hi, T::lit(SUPPORT_PAD), u_grid.len())?))
    }
}

/// Builds the forecast distribution of a given transport on `u_grid`,
/// widening the grid when needed.
pub fn forecast_from_transport<T: Scalar>(
    s_grid: &Arc<Grid<T>>,
    transport: Vec<T>,
    u_grid: &Arc<Grid<T>>,
    horizon: usize,
) -> Result<DistributionForecast<T>> {
    if u_grid.kind() != GridKind::Support {
        return Err(WarError::InvalidGrid("expected a support grid".into()));
    }
    let grid = covering_grid(s_grid, &transport, u_grid)?;
    let monotone = is_nondecreasing(&transport);
    let cdf = pushforward_cdf(s_grid, &transport, &grid);
    let density = density_from_cdf(&grid, &cdf, false)
        .map_err(|_| WarError::ForecastDegenerate { step: horizon })?;
    let quantile = if monotone {
        Some(QuantileFn::new(s_grid.clone(), transport.clone())?)
    } else {
        None
    };
    Ok(DistributionForecast {
        horizon,
        quantile,
        transport,
        cdf,
        density,
        monotone_transport: monotone,
    })
}

fn last_lags<T: Scalar>(series: &DensitySeries<T>, p: usize) -> Result<Vec<Vec<T>>> {
    let n = series.len();
    if n < p {
        return Err(WarError::InsufficientData(format!(
            "forecast of order {p} needs {p} observations, got {n}"
        )));
    }
    Ok((0..p).map(|i| series.get(n - 1 - i).values().to_vec()).collect())
}

fn check_fit_grid<T: Scalar>(fit: &WarFit<T>, series: &DensitySeries<T>) -> Result<()> {
    if fit.mean_quantile.grid().same_as(series.grid()) {
        Ok(())
    } else {
        Err(WarError::GridMismatch)
    }
}

pub fn forecast_one<T: Scalar>(
    fit: &WarFit<T>,
    series: &DensitySeries<T>,
    u_grid: &Arc<Grid<T>>,
) -> Result<DistributionForecast<T>> {
    check_fit_grid(fit, series)?;
    let lags = last_lags(series, fit.order)?;
    let refs: Vec<&[T]> = lags.iter().map(|l| l.as_slice()).collect();
    let t = forecast_transport(fit, &refs);
    forecast_from_transport(series.grid(), t, u_grid, 1)
}

/// Iterated forecasts for horizons `1..=steps`. Each forecast re-enters
/// the lag window as the quantile of its distribution.
pub fn forecast_multi<T: Scalar>(
    fit: &WarFit<T>,
    series: &DensitySeries<T>,
    steps: usize,
    u_grid: &Arc<Grid<T>>,
) -> Result<Vec<DistributionForecast<T>>> {
    if steps == 0 {
        return Err(WarError::InvalidArgument("steps must be at least 1".into()));
    }
    check_fit_grid(fit, series)?;
    let s_grid = series.grid();
    let mut lags = last_lags(series, fit.order)?;
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let refs: Vec<&[T]> = lags.iter().map(|l| l.as_slice()).collect();
        let t = forecast_transport(fit, &refs);
        let fc = forecast_from_transport(s_grid, t, u_grid, step)?;
        let next = match &fc.quantile {
            Some(q) => q.values().to_vec(),
            None => cdf_to_quantile(fc.u_grid(), &fc.cdf, s_grid)
                .map_err(|_| WarError::ForecastDegenerate { step })?
                .into_values(),
        };
        lags.rotate_right(1);
        lags[0] = next;
        out.push(fc);
    }
    Ok(out)
}

/// Recomputes `forecasts` on one support grid covering all of them, so a
/// multi-step run can be tabulated. Returns the input unchanged when the
/// grids already agree.
pub fn on_common_grid<T: Scalar>(
    s_grid: &Arc<Grid<T>>,
    forecasts: &[DistributionForecast<T>],
) -> Result<Vec<DistributionForecast<T>>> {
    let Some(first) = forecasts.first() else {
        return Ok(Vec::new());
    };
    let base = first.u_grid().clone();
    if forecasts.iter().all(|f| f.u_grid().same_as(&base)) {
        return Ok(forecasts.to_vec());
    }
    let (mut lo, mut hi) = (base.first(), base.last());
    for f in forecasts {
        let (a, b) = extended_range(s_grid.points(), &f.transport);
        lo = lo.min(a).min(f.u_grid().first());
        hi = hi.max(b).max(f.u_grid().last());
    }
    let grid = Arc::new(padded_support(lo, hi, T::lit(SUPPORT_PAD), base.len())?);
    forecasts
        .iter()
        .map(|f| forecast_from_transport(s_grid, f.transport.clone(), &grid, f.horizon))
        .collect()
}
