//! Forecast accuracy metrics between densities on a shared support grid.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Result, WarError};
use crate::grid::{density_to_quantile, weighted_sum, DensityFn, Grid};
use crate::scalar::Scalar;
use crate::wasserstein::wasserstein_distance;

/// Floor applied to densities before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricTag {
    Kld,
    JsdSqrt,
    /// Jensen-Shannon with the normalized geometric-mean mixture.
    JsdGeo,
    L1,
    L2,
    Linf,
    Wasserstein,
}

impl MetricTag {
    pub const ALL: [MetricTag; 7] = [
        MetricTag::Kld,
        MetricTag::JsdSqrt,
        MetricTag::JsdGeo,
        MetricTag::L1,
        MetricTag::L2,
        MetricTag::Linf,
        MetricTag::Wasserstein,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricTag::Kld => "kld",
            MetricTag::JsdSqrt => "jsd_sqrt",
            MetricTag::JsdGeo => "jsd_geo",
            MetricTag::L1 => "l1",
            MetricTag::L2 => "l2",
            MetricTag::Linf => "linf",
            MetricTag::Wasserstein => "wasserstein",
        }
    }
}

impl fmt::Display for MetricTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricTag {
    type Err = WarError;

    fn from_str(s: &str) -> Result<Self> {
        MetricTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| WarError::Parse(format!("unknown metric '{s}'")))
    }
}

fn kl<T: Scalar>(f: &[T], g: &[T], w: &[T]) -> T {
    let floor = T::lit(DENSITY_FLOOR);
    let terms: Vec<T> = f
        .iter()
        .zip(g)
        .map(|(&a, &b)| {
            let a = a.max(floor);
            let b = b.max(floor);
            a * (a / b).ln()
        })
        .collect();
    weighted_sum(&terms, w)
}

fn js<T: Scalar>(f: &[T], g: &[T], mix: &[T], w: &[T]) -> T {
    let half = T::lit(0.5);
    let v = half * kl(f, mix, w) + half * kl(g, mix, w);
    // below rounding level the square root would only amplify noise
    if v <= T::eps() * T::lit(64.0) {
        T::zero()
    } else {
        v.sqrt()
    }
}

/// Probability grid used by the `wasserstein` metric.
pub fn metric_probability_grid<T: Scalar>() -> Arc<Grid<T>> {
    Arc::new(Grid::probability_default(100).expect("default grid"))
}

pub fn evaluate_metric<T: Scalar>(tag: MetricTag, f: &DensityFn<T>, g: &DensityFn<T>) -> Result<T> {
    if !f.grid().same_as(g.grid()) {
        return Err(WarError::GridMismatch);
    }
    let w = f.grid().weights();
    let (a, b) = (f.values(), g.values());
    let diff = || a.iter().zip(b).map(|(&x, &y)| (x - y).abs());
    Ok(match tag {
        MetricTag::Kld => kl(a, b, w),
        MetricTag::JsdSqrt => {
            let half = T::lit(0.5);
            let mix: Vec<T> = a.iter().zip(b).map(|(&x, &y)| half * (x + y)).collect();
            js(a, b, &mix, w)
        }
        MetricTag::JsdGeo => {
            let geo: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x * y).sqrt()).collect();
            let z = weighted_sum(&geo, w);
            if !(z > T::zero()) {
                // disjoint supports: fall back to the arithmetic mixture
                let half = T::lit(0.5);
                let mix: Vec<T> = a.iter().zip(b).map(|(&x, &y)| half * (x + y)).collect();
                js(a, b, &mix, w)
            } else {
                let mix: Vec<T> = geo.iter().map(|&v| v / z).collect();
                js(a, b, &mix, w)
            }
        }
        MetricTag::L1 => weighted_sum(&diff().collect::<Vec<_>>(), w),
        MetricTag::L2 => weighted_sum(&diff().map(|d| d * d).collect::<Vec<_>>(), w).sqrt(),
        MetricTag::Linf => diff().fold(T::zero(), |m, d| m.max(d)),
        MetricTag::Wasserstein => {
            let s = metric_probability_grid();
            wasserstein_distance(&density_to_quantile(f, &s)?, &density_to_quantile(g, &s)?)?
        }
    })
}
