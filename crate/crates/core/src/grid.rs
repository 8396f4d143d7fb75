//! Grid-based representations of univariate distributions.
//!
//! Densities live on a support grid over `u`, quantile functions on a
//! probability grid over `s` in (0, 1). Every integral in the crate is a
//! trapezoidal sum against [`Grid::weights`].
//!
//! Probability grids never contain 0 or 1 (quantiles of unbounded
//! distributions are infinite there). Their quadrature weights extend the
//! end values flat over `(0, s_first)` and `(s_last, 1)`, so the weights of
//! a probability grid always sum to one and `integrate` approximates
//! integrals over the whole unit interval.
//!
//! When a quantile function has to be turned back into a cdf, the piecewise
//! linear interpolant is extended linearly beyond the first and last grid
//! points with the slope of the end segments, and the resulting cdf is
//! clipped to `[0, 1]`.

use std::sync::Arc;

use crate::error::{Result, WarError};
use crate::scalar::{sum, Scalar};

/// Monotonicity slack for quantile values.
pub const QUANTILE_MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Grid over the support of the underlying variable `u`.
    Support,
    /// Grid over probability levels `s` in (0, 1).
    Probability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Scalar> {
    points: Vec<T>,
    kind: GridKind,
    weights: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(points: Vec<T>, kind: GridKind) -> Result<Self> {
        if points.len() < 2 {
            return Err(WarError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(WarError::InvalidGrid("non-finite grid point".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WarError::InvalidGrid(
                "points must be strictly increasing".into(),
            ));
        }
        if kind == GridKind::Probability
            && (points[0] <= T::zero() || points[points.len() - 1] >= T::one())
        {
            return Err(WarError::InvalidGrid(
                "probability grid points must lie in (0, 1)".into(),
            ));
        }
        let weights = trapezoid_weights(&points, kind);
        Ok(Grid {
            points,
            kind,
            weights,
        })
    }

    pub fn support(points: Vec<T>) -> Result<Self> {
        Self::new(points, GridKind::Support)
    }

    pub fn probability(points: Vec<T>) -> Result<Self> {
        Self::new(points, GridKind::Probability)
    }

    /// `n` equally spaced support points from `lo` to `hi` inclusive.
    pub fn uniform_support(lo: T, hi: T, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(WarError::InvalidGrid(format!(
                "uniform support grid needs n >= 2 and hi > lo (n = {n})"
            )));
        }
        let step = (hi - lo) / T::from_count(n - 1);
        let mut points: Vec<T> = (0..n).map(|i| lo + step * T::from_count(i)).collect();
        points[n - 1] = hi;
        Self::support(points)
    }

    /// Probability grid for `subintervals` equal pieces of (0, 1): the
    /// interior breakpoints `k / subintervals` plus the two end-cell
    /// midpoints in place of 0 and 1.
    ///
    /// `probability_default(100)` is `0.005, 0.01, 0.02, ..., 0.99, 0.995`.
    pub fn probability_default(subintervals: usize) -> Result<Self> {
        if subintervals < 2 {
            return Err(WarError::InvalidGrid(
                "need at least 2 subintervals".into(),
            ));
        }
        let m = T::from_count(subintervals);
        let half = T::lit(0.5);
        let mut points = Vec::with_capacity(subintervals + 1);
        points.push(half / m);
        points.extend((1..subintervals).map(|k| T::from_count(k) / m));
        points.push(T::one() - half / m);
        Self::probability(points)
    }

    /// `n` cell midpoints `(k + 1/2) / n`.
    pub fn uniform_probability(n: usize) -> Result<Self> {
        let m = T::from_count(n);
        let half = T::lit(0.5);
        Self::probability((0..n).map(|k| (T::from_count(k) + half) / m).collect())
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> T {
        self.points[0]
    }

    pub fn last(&self) -> T {
        self.points[self.points.len() - 1]
    }

    /// Same kind and bit-identical points.
    pub fn same_as(&self, other: &Grid<T>) -> bool {
        std::ptr::eq(self, other) || (self.kind == other.kind && self.points == other.points)
    }
}

fn trapezoid_weights<T: Scalar>(points: &[T], kind: GridKind) -> Vec<T> {
    let n = points.len();
    let half = T::lit(0.5);
    let mut w = vec![T::zero(); n];
    for i in 0..n - 1 {
        let h = (points[i + 1] - points[i]) * half;
        w[i] += h;
        w[i + 1] += h;
    }
    if kind == GridKind::Probability {
        w[0] += points[0];
        w[n - 1] += T::one() - points[n - 1];
    }
    w
}

/// Trapezoidal quadrature of grid values.
pub fn integrate<T: Scalar>(values: &[T], grid: &Grid<T>) -> Result<T> {
    check_len(grid.len(), values.len())?;
    Ok(weighted_sum(values, grid.weights()))
}

#[inline]
pub(crate) fn weighted_sum<T: Scalar>(values: &[T], weights: &[T]) -> T {
    sum(values.iter().zip(weights).map(|(&v, &w)| v * w))
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(WarError::LengthMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// A density sampled on a support grid together with its cdf.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFn<T: Scalar> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
    cdf: Vec<T>,
    renormalization: T,
}

impl<T: Scalar> DensityFn<T> {
    /// Builds a density from nonnegative values, rescaling to unit
    /// trapezoidal mass.
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if grid.kind() != GridKind::Support {
            return Err(WarError::InvalidDensity(
                "densities require a support grid".into(),
            ));
        }
        check_len(grid.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(WarError::InvalidDensity(
                "values must be finite and nonnegative".into(),
            ));
        }
        let mass = integrate(&values, &grid)?;
        if !(mass > T::zero()) {
            return Err(WarError::InvalidDensity("zero total mass".into()));
        }
        let values: Vec<T> = values.into_iter().map(|v| v / mass).collect();
        let cdf = cumulative_trapezoid(grid.points(), &values);
        Ok(DensityFn {
            grid,
            values,
            cdf,
            renormalization: mass,
        })
    }

    /// Density evaluated pointwise from a closure, then normalized.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.points().iter().map(|&u| f(u)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn cdf_values(&self) -> &[T] {
        &self.cdf
    }

    /// Mass of the raw input before rescaling.
    pub fn renormalization(&self) -> T {
        self.renormalization
    }
}

fn cumulative_trapezoid<T: Scalar>(points: &[T], values: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut cdf = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    cdf.push(acc);
    for i in 1..values.len() {
        acc += (points[i] - points[i - 1]) * (values[i] + values[i - 1]) * half;
        cdf.push(acc.min(T::one()));
    }
    cdf
}

/// A quantile function sampled on a probability grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFn<T: Scalar> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> QuantileFn<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if grid.kind() != GridKind::Probability {
            return Err(WarError::InvalidQuantile(
                "quantile functions require a probability grid".into(),
            ));
        }
        check_len(grid.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WarError::InvalidQuantile("non-finite value".into()));
        }
        if let Some(k) = first_decrease(&values) {
            return Err(WarError::InvalidQuantile(format!(
                "values decrease at grid index {k}"
            )));
        }
        Ok(QuantileFn { grid, values })
    }

    /// Quantile function `s -> f(s)` on the given grid.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.points().iter().map(|&s| f(s)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Support implied by the linear tail extension: where the cdf reaches
    /// 0 and 1.
    pub fn extended_support(&self) -> (T, T) {
        extended_range(self.grid.points(), &self.values)
    }

    /// Cdf `F(u) = sup { s : Q(s) <= u }` of the interpolated quantile.
    pub fn cdf_at(&self, u: T) -> T {
        monotone_cdf(self.grid.points(), &self.values, u)
    }
}

/// Index of the first strict decrease beyond tolerance, if any.
pub(crate) fn first_decrease<T: Scalar>(values: &[T]) -> Option<usize> {
    let tol = T::lit(QUANTILE_MONOTONE_TOL);
    values.windows(2).position(|w| {
        let scale = T::one().max(w[0].abs()).max(w[1].abs());
        w[1] < w[0] - tol * scale
    })
}

pub(crate) fn is_nondecreasing<T: Scalar>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

/// Slopes of the first and last segments of a sampled map `s -> t(s)`.
fn end_slopes<T: Scalar>(s: &[T], t: &[T]) -> (T, T) {
    let n = s.len();
    (
        (t[1] - t[0]) / (s[1] - s[0]),
        (t[n - 1] - t[n - 2]) / (s[n - 1] - s[n - 2]),
    )
}

/// Values of the linearly extended map at `s = 0` and `s = 1`.
pub(crate) fn extended_ends<T: Scalar>(s: &[T], t: &[T]) -> (T, T) {
    let n = s.len();
    let (lo_slope, hi_slope) = end_slopes(s, t);
    (
        t[0] - s[0] * lo_slope,
        t[n - 1] + (T::one() - s[n - 1]) * hi_slope,
    )
}

/// Range covered by the linearly extended map over [0, 1].
pub(crate) fn extended_range<T: Scalar>(s: &[T], t: &[T]) -> (T, T) {
    let (a, b) = extended_ends(s, t);
    let lo = t.iter().fold(a.min(b), |m, &v| m.min(v));
    let hi = t.iter().fold(a.max(b), |m, &v| m.max(v));
    (lo, hi)
}

/// Generalized inverse of a nondecreasing piecewise linear quantile.
pub(crate) fn monotone_cdf<T: Scalar>(s: &[T], q: &[T], u: T) -> T {
    let n = s.len();
    let (lo_slope, hi_slope) = end_slopes(s, q);
    let value = if u < q[0] {
        if lo_slope > T::zero() {
            s[0] - (q[0] - u) / lo_slope
        } else {
            T::zero()
        }
    } else if u >= q[n - 1] {
        if hi_slope > T::zero() {
            s[n - 1] + (u - q[n - 1]) / hi_slope
        } else {
            T::one()
        }
    } else {
        // q[k-1] <= u < q[k]
        let k = q.partition_point(|&v| v <= u);
        let (q0, q1) = (q[k - 1], q[k]);
        s[k - 1] + (u - q0) / (q1 - q0) * (s[k] - s[k - 1])
    };
    value.max(T::zero()).min(T::one())
}

/// Lebesgue measure of `{ s in (0,1) : t(s) <= u }` for the piecewise
/// linear, linearly extended map through `(s_k, t_k)`. Works for maps of
/// any shape; sign changes inside a segment are located by linear
/// interpolation.
pub(crate) fn level_set_measure<T: Scalar>(s: &[T], t: &[T], u: T) -> T {
    let n = s.len();
    let (t_start, t_end) = extended_ends(s, t);
    let mut total = segment_measure(T::zero(), t_start, s[0], t[0], u);
    for k in 0..n - 1 {
        total += segment_measure(s[k], t[k], s[k + 1], t[k + 1], u);
    }
    total += segment_measure(s[n - 1], t[n - 1], T::one(), t_end, u);
    total.max(T::zero()).min(T::one())
}

#[inline]
fn segment_measure<T: Scalar>(a: T, ta: T, b: T, tb: T, u: T) -> T {
    let below_a = ta <= u;
    let below_b = tb <= u;
    match (below_a, below_b) {
        (true, true) => b - a,
        (false, false) => T::zero(),
        _ => {
            let c = a + (u - ta) / (tb - ta) * (b - a);
            let c = c.max(a).min(b);
            if below_a {
                c - a
            } else {
                b - c
            }
        }
    }
}

/// Invert a tabulated cdf at probability levels (generalized inverse, flat
/// stretches map to their left end).
pub fn cdf_to_quantile<T: Scalar>(
    u_grid: &Grid<T>,
    cdf: &[T],
    s_grid: &Arc<Grid<T>>,
) -> Result<QuantileFn<T>> {
    check_len(u_grid.len(), cdf.len())?;
    let u = u_grid.points();
    let n = u.len();
    let mut out = Vec::with_capacity(s_grid.len());
    let mut prev = -T::infinity();
    for &level in s_grid.points() {
        let i = cdf.partition_point(|&c| c < level);
        let value = if i == 0 {
            u[0]
        } else if i >= n {
            u[n - 1]
        } else {
            let (c0, c1) = (cdf[i - 1], cdf[i]);
            u[i - 1] + (level - c0) / (c1 - c0) * (u[i] - u[i - 1])
        };
        let value = value.max(prev);
        prev = value;
        out.push(value);
    }
    QuantileFn::new(s_grid.clone(), out)
}

/// Quantile function of a density on the given probability grid.
pub fn density_to_quantile<T: Scalar>(
    f: &DensityFn<T>,
    s_grid: &Arc<Grid<T>>,
) -> Result<QuantileFn<T>> {
    if s_grid.kind() != GridKind::Probability {
        return Err(WarError::InvalidGrid("expected a probability grid".into()));
    }
    let positive = f.values().iter().filter(|&&v| v > T::zero()).count();
    if positive < 2 {
        return Err(WarError::DegenerateSupport);
    }
    cdf_to_quantile(f.grid(), f.cdf_values(), s_grid)
}

/// Density obtained by differentiating a tabulated cdf: centered
/// differences inside, one-sided at the two ends, clipped at zero and
/// renormalized. `smooth` applies a width-3 moving average first.
pub fn density_from_cdf<T: Scalar>(
    u_grid: &Arc<Grid<T>>,
    cdf: &[T],
    smooth: bool,
) -> Result<DensityFn<T>> {
    check_len(u_grid.len(), cdf.len())?;
    let u = u_grid.points();
    let n = u.len();
    let mut d = Vec::with_capacity(n);
    d.push((cdf[1] - cdf[0]) / (u[1] - u[0]));
    for i in 1..n - 1 {
        d.push((cdf[i + 1] - cdf[i - 1]) / (u[i + 1] - u[i - 1]));
    }
    d.push((cdf[n - 1] - cdf[n - 2]) / (u[n - 1] - u[n - 2]));
    if smooth {
        d = moving_average3(&d);
    }
    let d: Vec<T> = d.into_iter().map(|v| v.max(T::zero())).collect();
    if d.iter().all(|&v| v == T::zero()) {
        return Err(WarError::DegenerateSupport);
    }
    DensityFn::new(u_grid.clone(), d)
}

fn moving_average3<T: Scalar>(d: &[T]) -> Vec<T> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            sum(d[lo..=hi].iter().copied()) / T::from_count(hi - lo + 1)
        })
        .collect()
}

pub(crate) fn check_covers<T: Scalar>(u_grid: &Grid<T>, lo: T, hi: T) -> Result<()> {
    let scale = T::one().max(lo.abs()).max(hi.abs());
    let slack = T::lit(1e-12) * scale;
    if u_grid.first() > lo + slack || u_grid.last() < hi - slack {
        return Err(WarError::SupportMismatch {
            needed_lo: lo.as_f64(),
            needed_hi: hi.as_f64(),
            grid_lo: u_grid.first().as_f64(),
            grid_hi: u_grid.last().as_f64(),
        });
    }
    Ok(())
}

/// Density of a quantile function on a support grid.
pub fn quantile_to_density<T: Scalar>(
    q: &QuantileFn<T>,
    u_grid: &Arc<Grid<T>>,
) -> Result<DensityFn<T>> {
    quantile_to_density_with(q, u_grid, false)
}

pub fn quantile_to_density_with<T: Scalar>(
    q: &QuantileFn<T>,
    u_grid: &Arc<Grid<T>>,
    smooth: bool,
) -> Result<DensityFn<T>> {
    if u_grid.kind() != GridKind::Support {
        return Err(WarError::InvalidGrid("expected a support grid".into()));
    }
    let v = q.values();
    check_covers(u_grid, v[0], v[v.len() - 1])?;
    let cdf: Vec<T> = u_grid.points().iter().map(|&u| q.cdf_at(u)).collect();
    density_from_cdf(u_grid, &cdf, smooth)
}

/// Uniform support grid covering `[lo, hi]` padded by `pad` of its width
/// on each side.
pub fn padded_support<T: Scalar>(lo: T, hi: T, pad: T, n: usize) -> Result<Grid<T>> {
    let mut width = hi - lo;
    if !(width > T::zero()) {
        width = T::one().max(lo.abs()) * T::lit(1e-6);
    }
    Grid::uniform_support(lo - pad * width, hi + pad * width, n)
}

/// An ordered sequence of quantile functions on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries<T: Scalar> {
    grid: Arc<Grid<T>>,
    quantiles: Vec<QuantileFn<T>>,
    timestamps: Option<Vec<String>>,
}

impl<T: Scalar> DensitySeries<T> {
    pub fn new(quantiles: Vec<QuantileFn<T>>) -> Result<Self> {
        let first = quantiles.first().ok_or(WarError::EmptySeries)?;
        let grid = first.grid().clone();
        if quantiles.iter().any(|q| !q.grid().same_as(&grid)) {
            return Err(WarError::GridMismatch);
        }
        Ok(DensitySeries {
            grid,
            quantiles,
            timestamps: None,
        })
    }

    /// Series from raw rows of quantile values on `grid`.
    pub fn from_rows(grid: Arc<Grid<T>>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(WarError::EmptySeries);
        }
        let quantiles = rows
            .into_iter()
            .map(|r| QuantileFn::new(grid.clone(), r))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensitySeries {
            grid,
            quantiles,
            timestamps: None,
        })
    }

    pub fn with_timestamps(mut self, timestamps: Vec<String>) -> Result<Self> {
        check_len(self.quantiles.len(), timestamps.len())?;
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.quantiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantiles.is_empty()
    }

    pub fn quantiles(&self) -> &[QuantileFn<T>] {
        &self.quantiles
    }

    pub fn get(&self, t: usize) -> &QuantileFn<T> {
        &self.quantiles[t]
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(WarError::InvalidArgument(format!(
                "window [{start}, {end}) outside series of length {}",
                self.len()
            )));
        }
        Ok(DensitySeries {
            grid: self.grid.clone(),
            quantiles: self.quantiles[start..end].to_vec(),
            timestamps: self.timestamps.as_ref().map(|ts| ts[start..end].to_vec()),
        })
    }

    pub fn push(&mut self, q: QuantileFn<T>) -> Result<()> {
        if !q.grid().same_as(&self.grid) {
            return Err(WarError::GridMismatch);
        }
        if let Some(ts) = self.timestamps.as_mut() {
            ts.push(format!("+{}", ts.len() + 1));
        }
        self.quantiles.push(q);
        Ok(())
    }
}
