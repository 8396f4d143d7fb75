//! Gaussian kernel density estimation on a support grid.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Result, WarError};
use crate::grid::{DensityFn, Grid};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<T: Scalar> {
    Fixed(T),
    /// `1.06 * sd * m^(-1/5)`.
    Silverman,
}

impl<T: Scalar> FromStr for Bandwidth<T> {
    type Err = WarError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("silverman") {
            return Ok(Bandwidth::Silverman);
        }
        let h: f64 = s
            .parse()
            .map_err(|_| WarError::Parse(format!("bad bandwidth '{s}'")))?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(WarError::InvalidArgument(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
        Ok(Bandwidth::Fixed(T::lit(h)))
    }
}

/// Sample standard deviation with divisor `m - 1`.
pub fn sample_sd<T: Scalar>(samples: &[T]) -> T {
    let m = T::from_count(samples.len());
    let mean = sum(samples.iter().copied()) / m;
    let ss = sum(samples.iter().map(|&x| (x - mean) * (x - mean)));
    (ss / (m - T::one())).sqrt()
}

pub fn silverman_bandwidth<T: Scalar>(samples: &[T]) -> Result<T> {
    if samples.len() < 2 {
        return Err(WarError::DegenerateSample);
    }
    let sd = sample_sd(samples);
    if !(sd > T::zero()) {
        return Err(WarError::DegenerateSample);
    }
    let m = T::from_count(samples.len());
    Ok(T::lit(1.06) * sd * m.powf(T::lit(-0.2)))
}

pub fn resolve_bandwidth<T: Scalar>(samples: &[T], bandwidth: Bandwidth<T>) -> Result<T> {
    match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(samples),
        Bandwidth::Fixed(h) if h > T::zero() => {
            if samples.len() < 2 || !(sample_sd(samples) > T::zero()) {
                Err(WarError::DegenerateSample)
            } else {
                Ok(h)
            }
        }
        Bandwidth::Fixed(_) => Err(WarError::InvalidArgument(
            "bandwidth must be positive".into(),
        )),
    }
}

/// Gaussian KDE of `samples` evaluated on `u_grid` and renormalized to unit
/// mass over the grid.
pub fn kde_estimate<T: Scalar>(
    samples: &[T],
    u_grid: &Arc<Grid<T>>,
    bandwidth: Bandwidth<T>,
) -> Result<DensityFn<T>> {
    let h = resolve_bandwidth(samples, bandwidth)?;
    let norm = T::one() / (T::from_count(samples.len()) * h * T::two_pi().sqrt());
    let half = T::lit(0.5);
    let values = u_grid
        .points()
        .iter()
        .map(|&u| {
            let acc = sum(samples.iter().map(|&x| {
                let z = (u - x) / h;
                (-half * z * z).exp()
            }));
            acc * norm
        })
        .collect();
    DensityFn::new(u_grid.clone(), values).map_err(|e| match e {
        // the grid misses every kernel: nothing to normalize
        WarError::InvalidDensity(_) => WarError::DegenerateSample,
        other => other,
    })
}
