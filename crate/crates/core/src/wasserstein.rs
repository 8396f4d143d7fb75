//! Wasserstein geometry in quantile coordinates.
//!
//! With `s = F(u)` the weighted inner product of `L2(f du)` becomes the
//! plain `L2(ds)` inner product, so distances, log maps and means all reduce
//! to arithmetic on quantile values over a shared probability grid.

use std::sync::Arc;

use crate::error::{Result, WarError};
use crate::grid::{
    check_covers, density_from_cdf, is_nondecreasing, level_set_measure, monotone_cdf,
    weighted_sum, DensityFn, DensitySeries, Grid, QuantileFn,
};
use crate::scalar::{sum, Scalar};

/// Tangent vector at a base distribution, stored as `V(Q_base(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField<T: Scalar> {
    base: QuantileFn<T>,
    values: Vec<T>,
    monotone_ok: bool,
}

impl<T: Scalar> TangentField<T> {
    pub fn new(base: QuantileFn<T>, values: Vec<T>) -> Result<Self> {
        crate::grid::check_len(base.values().len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WarError::InvalidArgument("non-finite tangent value".into()));
        }
        let pushed: Vec<T> = transport_values(&base, &values);
        let monotone_ok = is_nondecreasing(&pushed);
        Ok(TangentField {
            base,
            values,
            monotone_ok,
        })
    }

    pub fn zero(base: QuantileFn<T>) -> Self {
        let n = base.values().len();
        TangentField {
            base,
            values: vec![T::zero(); n],
            monotone_ok: true,
        }
    }

    pub fn base(&self) -> &QuantileFn<T> {
        &self.base
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Whether `V + id` is nondecreasing on the grid, i.e. the field lies in
    /// the image of the log map.
    pub fn monotone_ok(&self) -> bool {
        self.monotone_ok
    }

    /// `(V + id) o Q_base` on the grid.
    pub fn transport(&self) -> Vec<T> {
        transport_values(&self.base, &self.values)
    }

    /// Norm in `L2(f_base du)`, evaluated as `L2(ds)`.
    pub fn norm(&self) -> T {
        weighted_sum(
            &self.values.iter().map(|&v| v * v).collect::<Vec<_>>(),
            self.base.grid().weights(),
        )
        .sqrt()
    }
}

fn transport_values<T: Scalar>(base: &QuantileFn<T>, v: &[T]) -> Vec<T> {
    base.values().iter().zip(v).map(|(&q, &x)| q + x).collect()
}

fn check_same_grid<T: Scalar>(a: &QuantileFn<T>, b: &QuantileFn<T>) -> Result<()> {
    if a.grid().same_as(b.grid()) {
        Ok(())
    } else {
        Err(WarError::GridMismatch)
    }
}

/// 2-Wasserstein distance between two distributions given by quantiles.
pub fn wasserstein_distance<T: Scalar>(f: &QuantileFn<T>, g: &QuantileFn<T>) -> Result<T> {
    check_same_grid(f, g)?;
    Ok(squared_distance(f.values(), g.values(), f.grid().weights()).sqrt())
}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T], w: &[T]) -> T {
    sum(a
        .iter()
        .zip(b)
        .zip(w)
        .map(|((&x, &y), &wi)| (y - x) * (y - x) * wi))
}

/// Log map at `base`: `G^-1 o F - id`, in quantile coordinates.
pub fn log_map<T: Scalar>(base: &QuantileFn<T>, target: &QuantileFn<T>) -> Result<TangentField<T>> {
    check_same_grid(base, target)?;
    let values = target
        .values()
        .iter()
        .zip(base.values())
        .map(|(&g, &f)| g - f)
        .collect();
    // target is monotone, so base + values is too
    Ok(TangentField {
        base: base.clone(),
        values,
        monotone_ok: true,
    })
}

/// Cdf of the pushforward `(V + id)_# mu_base` on `u_grid`, i.e. the
/// measure of `{ s : V(Q(s)) + Q(s) <= u }`.
///
/// Monotone transports use the generalized-inverse fast path; otherwise the
/// level set is accumulated segment by segment.
pub fn pushforward_cdf<T: Scalar>(s_grid: &Grid<T>, transport: &[T], u_grid: &Grid<T>) -> Vec<T> {
    let s = s_grid.points();
    if is_nondecreasing(transport) {
        u_grid
            .points()
            .iter()
            .map(|&u| monotone_cdf(s, transport, u))
            .collect()
    } else {
        u_grid
            .points()
            .iter()
            .map(|&u| level_set_measure(s, transport, u))
            .collect()
    }
}

/// Level-set cdf evaluated without the monotone shortcut.
pub fn pushforward_cdf_level_set<T: Scalar>(
    s_grid: &Grid<T>,
    transport: &[T],
    u_grid: &Grid<T>,
) -> Vec<T> {
    let s = s_grid.points();
    u_grid
        .points()
        .iter()
        .map(|&u| level_set_measure(s, transport, u))
        .collect()
}

/// Exp map at `base`: the density of `(V + id)_# mu_base` on `u_grid`.
pub fn exp_map<T: Scalar>(
    base: &QuantileFn<T>,
    v: &TangentField<T>,
    u_grid: &Arc<Grid<T>>,
) -> Result<DensityFn<T>> {
    check_same_grid(base, v.base())?;
    let t = transport_values(base, v.values());
    let (lo, hi) = min_max(&t);
    check_covers(u_grid, lo, hi)?;
    let cdf = pushforward_cdf(base.grid(), &t, u_grid);
    density_from_cdf(u_grid, &cdf, false)
}

pub(crate) fn min_max<T: Scalar>(v: &[T]) -> (T, T) {
    v.iter()
        .fold((v[0], v[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Wasserstein (Frechet) mean: the pointwise average of the quantiles.
pub fn frechet_mean<T: Scalar>(series: &DensitySeries<T>) -> Result<QuantileFn<T>> {
    if series.is_empty() {
        return Err(WarError::EmptySeries);
    }
    let m = series.grid().len();
    let n = T::from_count(series.len());
    // average of offsets from the first element, so that identical
    // elements reproduce exactly
    let first = series.get(0).values();
    let mut acc = vec![T::zero(); m];
    for q in &series.quantiles()[1..] {
        for ((a, &v), &f) in acc.iter_mut().zip(q.values()).zip(first) {
            *a += v - f;
        }
    }
    let mut mean: Vec<T> = acc.into_iter().zip(first).map(|(a, &f)| f + a / n).collect();
    // rounding can break ties by an ulp
    for k in 1..m {
        if mean[k] < mean[k - 1] {
            mean[k] = mean[k - 1];
        }
    }
    QuantileFn::new(series.grid().clone(), mean)
}

/// `n^-1 sum_t d_W^2(f_t, mean)`.
pub fn wasserstein_variance<T: Scalar>(series: &DensitySeries<T>, mean: &QuantileFn<T>) -> Result<T> {
    if series.is_empty() {
        return Err(WarError::EmptySeries);
    }
    if !series.grid().same_as(mean.grid()) {
        return Err(WarError::GridMismatch);
    }
    let w = mean.grid().weights();
    let total = sum(series
        .quantiles()
        .iter()
        .map(|q| squared_distance(q.values(), mean.values(), w)));
    Ok(total / T::from_count(series.len()))
}
