//! Fully functional WAR(p): operator-valued coefficients estimated through
//! a functional principal component basis of the centred quantiles.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, WarError};
use crate::forecast::{forecast_from_transport, DistributionForecast};
use crate::grid::{DensitySeries, Grid, QuantileFn};
use crate::linalg::{default_tol, gauss_solve};
use crate::scalar::{sum, Scalar};
use crate::war::{centered, is_constant_series};
use crate::wasserstein::frechet_mean;

/// Eigenvalues above `-EIGEN_CLIP` are clipped to zero.
pub const EIGEN_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaBasis<T: Scalar> {
    pub grid: Arc<Grid<T>>,
    /// Retained eigenfunctions on the probability grid, orthonormal in
    /// the quadrature inner product.
    pub eigenfunctions: Vec<Vec<T>>,
    /// All eigenvalues, nonincreasing.
    pub eigenvalues: Vec<T>,
    pub retained: usize,
    /// Variance fraction explained by the retained components.
    pub fraction: T,
    pub target: T,
}

impl<T: Scalar> FpcaBasis<T> {
    /// Scores `<x, phi_k>` of a centred curve.
    pub fn scores(&self, x: &[T]) -> Vec<T> {
        let w = self.grid.weights();
        self.eigenfunctions
            .iter()
            .map(|phi| sum(x.iter().zip(phi).zip(w).map(|((&a, &b), &c)| a * b * c)))
            .collect()
    }

    /// `sum_k xi_k phi_k`.
    pub fn reconstruct(&self, xi: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.len()];
        for (&c, phi) in xi.iter().zip(&self.eigenfunctions) {
            for (o, &v) in out.iter_mut().zip(phi) {
                *o += c * v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfwarFit<T: Scalar> {
    pub order: usize,
    pub basis: FpcaBasis<T>,
    /// `A_j` with `xi_t ~ sum_j A_j xi_{t-j}`, each `m x m`.
    pub coefficients: Vec<DMatrix<T>>,
    pub mean_quantile: QuantileFn<T>,
}

impl<T: Scalar> FfwarFit<T> {
    /// Kernel `phi_j(s, s')` of lag `j` (1-based) on the probability grid.
    pub fn kernel(&self, j: usize) -> DMatrix<T> {
        let g = self.basis.grid.len();
        let a = &self.coefficients[j - 1];
        let ef = &self.basis.eigenfunctions;
        DMatrix::from_fn(g, g, |s, t| {
            let mut acc = T::zero();
            for r in 0..ef.len() {
                for c in 0..ef.len() {
                    acc += a[(r, c)] * ef[r][s] * ef[c][t];
                }
            }
            acc
        })
    }
}

pub fn fpca<T: Scalar>(series: &DensitySeries<T>, mean: &QuantileFn<T>, r: T) -> Result<FpcaBasis<T>> {
    if !(r > T::zero() && r <= T::one()) {
        return Err(WarError::InvalidArgument("variance fraction must lie in (0, 1]".into()));
    }
    if series.len() < 2 {
        return Err(WarError::InsufficientData("fpca needs at least 2 observations".into()));
    }
    if !series.grid().same_as(mean.grid()) {
        return Err(WarError::GridMismatch);
    }
    let grid = series.grid().clone();
    let x = centered(series, mean);
    let n = x.len();
    let m = grid.len();
    let sw: Vec<T> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let xm = DMatrix::from_fn(n, m, |t, s| x[t][s] * sw[s]);
    let cov = (xm.transpose() * &xm) / T::from_count(n);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let clip = T::lit(EIGEN_CLIP);
    let values: Vec<T> = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v < T::zero() && v >= -clip {
                T::zero()
            } else {
                v.max(T::zero())
            }
        })
        .collect();
    let total = sum(values.iter().copied());
    if !(total > T::zero()) || is_constant_series(series)? {
        return Err(WarError::ZeroVariance);
    }
    let target = r - T::lit(1e-12);
    let mut acc = T::zero();
    let mut retained = m;
    for (k, &v) in values.iter().enumerate() {
        acc += v;
        if acc / total >= target {
            retained = k + 1;
            break;
        }
    }
    let eigenfunctions = order[..retained]
        .iter()
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            let mut phi: Vec<T> = col.iter().zip(&sw).map(|(&v, &w)| v / w).collect();
            let lead = phi
                .iter()
                .copied()
                .fold(T::zero(), |best, v| if v.abs() > best.abs() { v } else { best });
            if lead < T::zero() {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            phi
        })
        .collect();
    let fraction = sum(values[..retained].iter().copied()) / total;
    Ok(FpcaBasis {
        grid,
        eigenfunctions,
        eigenvalues: values,
        retained,
        fraction,
        target: r,
    })
}

pub fn fit_ffwar<T: Scalar>(series: &DensitySeries<T>, p: usize, r: T) -> Result<FfwarFit<T>> {
    if p == 0 {
        return Err(WarError::InvalidArgument("order must be at least 1".into()));
    }
    let mean = frechet_mean(series)?;
    let basis = match fpca(series, &mean, r) {
        Ok(b) => b,
        Err(WarError::ZeroVariance) => {
            return Ok(FfwarFit {
                order: p,
                basis: FpcaBasis {
                    grid: series.grid().clone(),
                    eigenfunctions: Vec::new(),
                    eigenvalues: vec![T::zero(); series.grid().len()],
                    retained: 0,
                    fraction: T::one(),
                    target: r,
                },
                coefficients: vec![DMatrix::zeros(0, 0); p],
                mean_quantile: mean,
            })
        }
        Err(e) => return Err(e),
    };
    let m = basis.retained;
    let n = series.len();
    if n <= p * m + p {
        return Err(WarError::InsufficientData(format!(
            "score regression with {} regressors needs more than {} observations",
            p * m,
            p * m + p
        )));
    }
    let x = centered(series, &mean);
    let xi: Vec<Vec<T>> = x.iter().map(|c| basis.scores(c)).collect();
    let rows = n - p;
    let z = DMatrix::from_fn(rows, p * m, |i, c| xi[i + p - 1 - c / m][c % m]);
    let y = DMatrix::from_fn(rows, m, |i, c| xi[i + p][c]);
    let zt = z.transpose();
    let b = gauss_solve(&(&zt * &z), &(&zt * &y), default_tol(p * m)).ok_or(WarError::SingularDesign)?;
    let coefficients = (0..p)
        .map(|j| DMatrix::from_fn(m, m, |a, c| b[(j * m + c, a)]))
        .collect();
    Ok(FfwarFit {
        order: p,
        basis,
        coefficients,
        mean_quantile: mean,
    })
}

/// Predicted transport `Q_mean + sum_j phi_j X_{n+1-j}`.
pub fn ffwar_transport<T: Scalar>(fit: &FfwarFit<T>, series: &DensitySeries<T>) -> Result<Vec<T>> {
    if !series.grid().same_as(fit.mean_quantile.grid()) {
        return Err(WarError::GridMismatch);
    }
    let n = series.len();
    let p = fit.order;
    if n < p {
        return Err(WarError::InsufficientData(format!(
            "forecast of order {p} needs {p} observations, got {n}"
        )));
    }
    let m = fit.basis.retained;
    let mean = fit.mean_quantile.values();
    let mut next = vec![T::zero(); m];
    for j in 0..p {
        let q = series.get(n - 1 - j).values();
        let x: Vec<T> = q.iter().zip(mean).map(|(&a, &b)| a - b).collect();
        let xi = fit.basis.scores(&x);
        let a = &fit.coefficients[j];
        for (r, nr) in next.iter_mut().enumerate() {
            for (c, &v) in xi.iter().enumerate() {
                *nr += a[(r, c)] * v;
            }
        }
    }
    let v = fit.basis.reconstruct(&next);
    Ok(mean.iter().zip(&v).map(|(&a, &b)| a + b).collect())
}

pub fn forecast_ffwar<T: Scalar>(
    fit: &FfwarFit<T>,
    series: &DensitySeries<T>,
    u_grid: &Arc<Grid<T>>,
) -> Result<DistributionForecast<T>> {
    let t = ffwar_transport(fit, series)?;
    forecast_from_transport(series.grid(), t, u_grid, 1)
}
