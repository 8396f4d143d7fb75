//! WAR(p) estimation by Yule-Walker equations in quantile coordinates,
//! the Wasserstein autocorrelation function, psi-weights, causality and
//! asymptotic covariances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, WarError};
use crate::grid::{integrate, weighted_sum, DensitySeries, QuantileFn};
use crate::linalg::{default_tol, gauss_solve};
use crate::scalar::{sum, Scalar};
use crate::wasserstein::frechet_mean;

/// Tail mass allowed beyond the truncated psi sequence.
pub const PSI_TAIL_TOL: f64 = 1e-10;
/// Hard cap on the number of psi weights.
pub const PSI_MAX_TERMS: usize = 100_000;
/// Causality margin on root moduli.
pub const CAUSAL_MARGIN: f64 = 1e-9;

/// Lag-`h` autocovariance trace `lambda_h(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovTrace<T: Scalar> {
    pub lag: usize,
    pub values: Vec<T>,
}

/// Plug-in estimates of the innovation constants.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationStats<T: Scalar> {
    pub sigma2_eps: T,
    pub k1: T,
    pub k2: T,
    /// Diagonal `C(s, s)` of the residual covariance kernel.
    pub residual_variance: Vec<T>,
    pub residual_count: usize,
}

/// A fitted WAR(p) model.
#[derive(Debug, Clone, PartialEq)]
pub struct WarFit<T: Scalar> {
    pub order: usize,
    pub beta: Vec<T>,
    pub mean_quantile: QuantileFn<T>,
    pub traces: Vec<AutocovTrace<T>>,
    /// `p x p` Toeplitz matrix with entries `int lambda_|j-k| ds`.
    pub gamma_matrix: DMatrix<T>,
    pub psi: Vec<T>,
    pub innovation: Option<InnovationStats<T>>,
    pub asym_cov: Option<DMatrix<T>>,
    pub causal: bool,
    pub root_moduli: Vec<T>,
    pub n_obs: usize,
    /// Set when the series had no variability and the fit is the mean only.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    /// Estimate innovation constants and the asymptotic covariance.
    pub inference: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { inference: true }
    }
}

/// Result of a causality check.
#[derive(Debug, Clone, PartialEq)]
pub struct Causality<T: Scalar> {
    pub causal: bool,
    /// Moduli of the roots of `1 - sum beta_j z^j`, ascending. Infinite
    /// entries stand for a degree drop (trailing zero coefficients).
    pub root_moduli: Vec<T>,
}

pub(crate) fn centered<T: Scalar>(series: &DensitySeries<T>, mean: &QuantileFn<T>) -> Vec<Vec<T>> {
    series
        .quantiles()
        .iter()
        .map(|q| q.values().iter().zip(mean.values()).map(|(&a, &b)| a - b).collect())
        .collect()
}

pub fn autocov_traces<T: Scalar>(
    series: &DensitySeries<T>,
    mean: &QuantileFn<T>,
    max_lag: usize,
) -> Result<Vec<AutocovTrace<T>>> {
    if !series.grid().same_as(mean.grid()) {
        return Err(WarError::GridMismatch);
    }
    let n = series.len();
    if max_lag >= n {
        return Err(WarError::InsufficientData(format!(
            "lag {max_lag} needs more than {n} observations"
        )));
    }
    let x = centered(series, mean);
    Ok(traces_from_centered(&x, max_lag))
}

fn traces_from_centered<T: Scalar>(x: &[Vec<T>], max_lag: usize) -> Vec<AutocovTrace<T>> {
    let n = x.len();
    let m = x[0].len();
    let nt = T::from_count(n);
    (0..=max_lag)
        .map(|h| {
            let mut acc = vec![T::zero(); m];
            for t in 0..n - h {
                for ((a, &u), &v) in acc.iter_mut().zip(&x[t]).zip(&x[t + h]) {
                    *a += u * v;
                }
            }
            AutocovTrace {
                lag: h,
                values: acc.into_iter().map(|a| a / nt).collect(),
            }
        })
        .collect()
}

/// `int lambda_h ds` for each trace.
fn integrated<T: Scalar>(traces: &[AutocovTrace<T>], series: &DensitySeries<T>) -> Vec<T> {
    traces
        .iter()
        .map(|tr| weighted_sum(&tr.values, series.grid().weights()))
        .collect()
}

/// True when the integrated lag-0 autocovariance is zero up to rounding
/// relative to the overall size of the quantiles.
fn negligible_variance<T: Scalar>(int0: T, series: &DensitySeries<T>) -> bool {
    let w = series.grid().weights();
    let energy = sum(series.quantiles().iter().map(|q| {
        weighted_sum(&q.values().iter().map(|&v| v * v).collect::<Vec<_>>(), w)
    })) / T::from_count(series.len());
    let rel = T::eps() * T::lit(64.0);
    !(int0 > rel * rel * energy)
}

/// Whether the series has (numerically) zero Wasserstein variance.
pub fn is_constant_series<T: Scalar>(series: &DensitySeries<T>) -> Result<bool> {
    let mean = frechet_mean(series)?;
    let tr = autocov_traces(series, &mean, 0)?;
    let int0 = integrate(&tr[0].values, series.grid())?;
    Ok(negligible_variance(int0, series))
}

/// Wasserstein autocorrelations `rho_0 ..= rho_H`; `rho_0 = 1`.
pub fn wasserstein_acf<T: Scalar>(series: &DensitySeries<T>, max_lag: usize) -> Result<Vec<T>> {
    let mean = frechet_mean(series)?;
    let traces = autocov_traces(series, &mean, max_lag)?;
    let ints = integrated(&traces, series);
    if negligible_variance(ints[0], series) {
        return Err(WarError::ZeroVariance);
    }
    Ok(ints.iter().map(|&g| g / ints[0]).collect())
}

/// psi-weights of `1 / (1 - sum beta_j z^j)` up to index `k_max`.
pub fn psi_weights<T: Scalar>(beta: &[T], k_max: usize) -> Vec<T> {
    let mut psi = Vec::with_capacity(k_max + 1);
    psi.push(T::one());
    for k in 1..=k_max {
        let mut acc = T::zero();
        for (j, &b) in beta.iter().enumerate().take(k) {
            acc += b * psi[k - 1 - j];
        }
        psi.push(acc);
    }
    psi
}

/// psi-weights truncated once the remaining absolute tail is below
/// `PSI_TAIL_TOL`.
///
/// The tail bound uses the spectral radius `r` of the companion matrix:
/// future weights are controlled by the last `p` values times a geometric
/// series in `sqrt(r)`, which leaves room for the polynomial factors of
/// repeated roots.
pub fn truncated_psi<T: Scalar>(beta: &[T]) -> Result<Vec<T>> {
    let caus = check_causality(beta);
    if !caus.causal {
        return Err(WarError::NonCausal);
    }
    let p = beta.len();
    let radius = caus
        .root_moduli
        .first()
        .map(|&m| T::one() / m)
        .unwrap_or(T::zero());
    let rate = radius.sqrt();
    let factor = T::from_count(p.max(1)) / (T::one() - rate);
    let tol = T::lit(PSI_TAIL_TOL);
    let mut psi = vec![T::one()];
    for k in 1..=PSI_MAX_TERMS {
        let mut acc = T::zero();
        for (j, &b) in beta.iter().enumerate().take(k) {
            acc += b * psi[k - 1 - j];
        }
        psi.push(acc);
        if k >= p {
            let recent = psi[k + 1 - p.max(1)..=k]
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs()));
            if recent * factor <= tol {
                return Ok(psi);
            }
        }
    }
    Err(WarError::PsiTruncation(PSI_MAX_TERMS))
}

/// Causality of `phi(z) = 1 - sum beta_j z^j` from the eigenvalues of the
/// companion matrix (reciprocals of the roots).
pub fn check_causality<T: Scalar>(beta: &[T]) -> Causality<T> {
    let p = beta.len();
    if p == 0 {
        return Causality {
            causal: true,
            root_moduli: Vec::new(),
        };
    }
    let mut c = DMatrix::<T>::zeros(p, p);
    for (j, &b) in beta.iter().enumerate() {
        c[(0, j)] = b;
    }
    for i in 1..p {
        c[(i, i - 1)] = T::one();
    }
    let eig = c.complex_eigenvalues();
    let mut moduli: Vec<T> = eig
        .iter()
        .map(|z| {
            let r = (z.re * z.re + z.im * z.im).sqrt();
            if r > T::zero() {
                T::one() / r
            } else {
                T::infinity()
            }
        })
        .collect();
    moduli.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let margin = T::one() + T::lit(CAUSAL_MARGIN);
    let causal = moduli.iter().all(|&m| m > margin);
    Causality {
        causal,
        root_moduli: moduli,
    }
}

pub fn fit_war<T: Scalar>(series: &DensitySeries<T>, p: usize) -> Result<WarFit<T>> {
    fit_war_with(series, p, FitOptions::default())
}

pub fn fit_war_with<T: Scalar>(
    series: &DensitySeries<T>,
    p: usize,
    options: FitOptions,
) -> Result<WarFit<T>> {
    let n = series.len();
    if p == 0 {
        return Err(WarError::InvalidArgument("order must be at least 1".into()));
    }
    if n <= p + 1 {
        return Err(WarError::InsufficientData(format!(
            "order {p} needs more than {} observations, got {n}",
            p + 1
        )));
    }
    let mean = frechet_mean(series)?;
    let x = centered(series, &mean);
    let traces = traces_from_centered(&x, p);
    let ints = integrated(&traces, series);
    if negligible_variance(ints[0], series) {
        return Err(WarError::ZeroVariance);
    }
    let gamma = DMatrix::from_fn(p, p, |j, k| ints[j.abs_diff(k)]);
    let rhs = DMatrix::from_fn(p, 1, |j, _| ints[j + 1]);
    let sol = gauss_solve(&gamma, &rhs, default_tol(p)).ok_or(WarError::SingularAutocovariance)?;
    let beta: Vec<T> = sol.iter().copied().collect();

    let caus = check_causality(&beta);
    let psi = if caus.causal {
        truncated_psi(&beta).unwrap_or_else(|_| psi_weights(&beta, 100))
    } else {
        psi_weights(&beta, 100)
    };
    let mut fit = WarFit {
        order: p,
        beta,
        mean_quantile: mean,
        traces,
        gamma_matrix: gamma,
        psi,
        innovation: None,
        asym_cov: None,
        causal: caus.causal,
        root_moduli: caus.root_moduli,
        n_obs: n,
        degenerate: false,
    };
    if options.inference {
        fit.innovation = innovation_from_centered(&x, &fit.beta, series).ok();
        if fit.innovation.is_some() {
            fit.asym_cov = asymptotic_covariance(&fit).ok();
        }
    }
    Ok(fit)
}

impl<T: Scalar> WarFit<T> {
    /// Zero-coefficient model centred at the Frechet mean. Used for series
    /// without variability, where the Yule-Walker system is undefined and
    /// every forecast is the mean.
    pub fn mean_only(series: &DensitySeries<T>, p: usize) -> Result<Self> {
        let p = p.max(1);
        let mean = frechet_mean(series)?;
        let m = series.grid().len();
        Ok(WarFit {
            order: p,
            beta: vec![T::zero(); p],
            mean_quantile: mean,
            traces: (0..=p)
                .map(|lag| AutocovTrace {
                    lag,
                    values: vec![T::zero(); m],
                })
                .collect(),
            gamma_matrix: DMatrix::zeros(p, p),
            psi: vec![T::one()],
            innovation: None,
            asym_cov: None,
            causal: true,
            root_moduli: vec![T::infinity(); p],
            n_obs: series.len(),
            degenerate: true,
        })
    }
}

/// Fit, or the mean-only model when the series has no variability.
pub fn fit_war_or_mean<T: Scalar>(
    series: &DensitySeries<T>,
    p: usize,
    options: FitOptions,
) -> Result<WarFit<T>> {
    if is_constant_series(series)? {
        return WarFit::mean_only(series, p);
    }
    fit_war_with(series, p, options)
}

pub fn estimate_innovation_stats<T: Scalar>(
    series: &DensitySeries<T>,
    fit: &WarFit<T>,
) -> Result<InnovationStats<T>> {
    if !series.grid().same_as(fit.mean_quantile.grid()) {
        return Err(WarError::GridMismatch);
    }
    let x = centered(series, &fit.mean_quantile);
    innovation_from_centered(&x, &fit.beta, series)
}

fn innovation_from_centered<T: Scalar>(
    x: &[Vec<T>],
    beta: &[T],
    series: &DensitySeries<T>,
) -> Result<InnovationStats<T>> {
    let p = beta.len();
    let n = x.len();
    let count = n.saturating_sub(p);
    if count < 3 {
        return Err(WarError::InsufficientResiduals(count));
    }
    let m = x[0].len();
    let mut e = DMatrix::<T>::zeros(count, m);
    for t in p..n {
        for s in 0..m {
            let mut v = x[t][s];
            for (j, &b) in beta.iter().enumerate() {
                v -= b * x[t - 1 - j][s];
            }
            e[(t - p, s)] = v;
        }
    }
    let nt = T::from_count(count);
    for s in 0..m {
        let mu = sum(e.column(s).iter().copied()) / nt;
        for t in 0..count {
            e[(t, s)] -= mu;
        }
    }
    let w = series.grid().weights();
    let c = (e.transpose() * &e) / nt;
    let diag: Vec<T> = (0..m).map(|s| c[(s, s)]).collect();
    let denom = weighted_sum(&diag, w);
    let mut k1 = T::zero();
    for i in 0..m {
        let mut row = T::zero();
        for j in 0..m {
            row += w[j] * c[(i, j)] * c[(i, j)];
        }
        k1 += w[i] * row;
    }
    let scale = sum(x.iter().flatten().map(|v| v.abs())) / T::from_count(n * m);
    let rel = T::eps() * T::lit(64.0);
    if !(denom > rel * rel * scale * scale) || !(k1 > T::zero()) {
        return Err(WarError::ZeroVariance);
    }
    let m4 = sum((0..count).map(|t| {
        let q = sum((0..m).map(|s| w[s] * e[(t, s)] * e[(t, s)]));
        q * q
    })) / nt;
    let k2 = m4 - T::lit(2.0) * k1 - denom * denom;
    Ok(InnovationStats {
        sigma2_eps: k1 / (denom * denom),
        k1,
        k2,
        residual_variance: diag,
        residual_count: count,
    })
}

/// `sum_k psi_k psi_{k+lag}` over the stored psi weights.
pub(crate) fn psi_autocov<T: Scalar>(psi: &[T], lag: usize) -> T {
    if lag >= psi.len() {
        return T::zero();
    }
    sum(psi.iter().zip(&psi[lag..]).map(|(&a, &b)| a * b))
}

/// Asymptotic covariance of `sqrt(n) (beta_hat - beta)`:
/// `sigma2_eps * M^-1` with `M_ij = sum_k psi_k psi_{k+|i-j|}`.
pub fn asymptotic_covariance<T: Scalar>(fit: &WarFit<T>) -> Result<DMatrix<T>> {
    if !fit.causal {
        return Err(WarError::NonCausal);
    }
    let stats = fit
        .innovation
        .as_ref()
        .ok_or_else(|| WarError::InvalidArgument("fit carries no innovation statistics".into()))?;
    let psi = truncated_psi(&fit.beta)?;
    covariance_from_psi(&psi, fit.order, stats.sigma2_eps)
}

pub(crate) fn covariance_from_psi<T: Scalar>(psi: &[T], p: usize, sigma2: T) -> Result<DMatrix<T>> {
    let acov: Vec<T> = (0..p).map(|h| psi_autocov(psi, h)).collect();
    let m = DMatrix::from_fn(p, p, |i, j| acov[i.abs_diff(j)]);
    let inv = gauss_solve(&m, &DMatrix::identity(p, p), default_tol(p))
        .ok_or(WarError::SingularAutocovariance)?;
    let sym = (&inv + inv.transpose()) * T::lit(0.5);
    Ok(sym * sigma2)
}

/// Asymptotic covariance of `sqrt(n) (rho_hat_1..h - rho_1..h)`, computed
/// as `D V D^T` from the psi weights and the innovation constants.
pub fn acf_asymptotic_covariance<T: Scalar>(fit: &WarFit<T>, h: usize) -> Result<DMatrix<T>> {
    if !fit.causal {
        return Err(WarError::NonCausal);
    }
    let stats = fit
        .innovation
        .as_ref()
        .ok_or_else(|| WarError::InvalidArgument("fit carries no innovation statistics".into()))?;
    let psi = truncated_psi(&fit.beta)?;
    let int_c = weighted_sum(&stats.residual_variance, fit.mean_quantile.grid().weights());
    Ok(acf_covariance_from_psi(&psi, h, stats.k1, stats.k2, int_c))
}

pub(crate) fn acf_covariance_from_psi<T: Scalar>(
    psi: &[T],
    h: usize,
    k1: T,
    k2: T,
    int_c: T,
) -> DMatrix<T> {
    let len = psi.len() as isize;
    let at = |m: isize| -> T {
        if m < 0 || m >= len {
            T::zero()
        } else {
            psi[m as usize]
        }
    };
    let acov = |m: isize| psi_autocov(psi, m.unsigned_abs());
    let reach = len + h as isize;
    let mut v = DMatrix::<T>::zeros(h + 1, h + 1);
    for i in 0..=h {
        for j in i..=h {
            let (ii, jj) = (i as isize, j as isize);
            let mut total = T::zero();
            for r in -reach..=reach {
                let mut s1 = T::zero();
                let k_lo = 0.max(-r).max(-r - jj);
                for k in k_lo..len {
                    let a = at(k + ii);
                    if a == T::zero() {
                        continue;
                    }
                    s1 += psi[k as usize] * a * at(k + r) * at(k + r + jj);
                }
                let s2 = acov(r) * acov(r + jj - ii);
                let s3 = acov(r + jj) * acov(r - ii);
                total += s1 * k2 + (s2 + s3) * k1;
            }
            v[(i, j)] = total;
            v[(j, i)] = total;
        }
    }
    let g0 = psi_autocov(psi, 0) * int_c;
    let mut d = DMatrix::<T>::zeros(h, h + 1);
    for i in 1..=h {
        let rho = psi_autocov(psi, i) / psi_autocov(psi, 0);
        d[(i - 1, 0)] = -rho / g0;
        d[(i - 1, i)] = T::one() / g0;
    }
    let out = &d * v * d.transpose();
    (&out + out.transpose()) * T::lit(0.5)
}

/// Convolution of `psi` with `(1, -beta_1, ..., -beta_p)`.
pub fn psi_convolution<T: Scalar>(psi: &[T], beta: &[T]) -> Vec<T> {
    (0..psi.len())
        .map(|k| {
            let mut acc = psi[k];
            for (j, &b) in beta.iter().enumerate() {
                if k > j {
                    acc -= b * psi[k - 1 - j];
                }
            }
            acc
        })
        .collect()
}

/// Vector form of `beta` for callers working with nalgebra.
pub fn beta_vector<T: Scalar>(fit: &WarFit<T>) -> DVector<T> {
    DVector::from_column_slice(&fit.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::simulate::{simulate_war, EtaDist, InnovationModel, SimConfig};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn sgrid() -> Arc<Grid<f64>> {
        Arc::new(Grid::probability_default(100).unwrap())
    }

    fn series_from(s: &Arc<Grid<f64>>, f: impl Fn(usize, f64) -> f64, n: usize) -> DensitySeries<f64> {
        let qs = (0..n)
            .map(|t| QuantileFn::from_fn(s.clone(), |x| f(t, x)).unwrap())
            .collect();
        DensitySeries::new(qs).unwrap()
    }

    fn ar1_shift(beta: f64, n: usize, seed: u64) -> DensitySeries<f64> {
        let mut cfg = SimConfig::new(vec![beta], InnovationModel::Constant { eta: EtaDist::Normal { sd: 1.0 } }, n);
        cfg.seed = seed;
        simulate_war(&cfg).unwrap()
    }

    #[test]
    fn constant_series_traces_vanish() {
        let s = sgrid();
        let ser = series_from(&s, |_, x| x, 5);
        let mean = frechet_mean(&ser).unwrap();
        for tr in autocov_traces(&ser, &mean, 3).unwrap() {
            assert!(tr.values.iter().all(|&v| v == 0.0));
        }
        assert_eq!(wasserstein_acf(&ser, 1).unwrap_err(), WarError::ZeroVariance);
        assert_eq!(fit_war(&ser, 1).unwrap_err(), WarError::ZeroVariance);
    }

    #[test]
    fn two_point_hand_computation() {
        let s = sgrid();
        let ser = series_from(&s, |t, x| if t == 0 { x } else { 3.0 * x }, 2);
        let mean = QuantileFn::from_fn(s.clone(), |x| 2.0 * x).unwrap();
        let tr = autocov_traces(&ser, &mean, 1).unwrap();
        for (k, &x) in s.points().iter().enumerate() {
            assert!((tr[0].values[k] - x * x).abs() < 1e-15);
            assert!((tr[1].values[k] + x * x / 2.0).abs() < 1e-15);
        }
        assert!(autocov_traces(&ser, &mean, 2).is_err());
    }

    #[test]
    fn ar1_traces_match_theory() {
        let ser = ar1_shift(0.5, 5000, 1);
        let mean = frechet_mean(&ser).unwrap();
        let tr = autocov_traces(&ser, &mean, 2).unwrap();
        for (h, trace) in tr.iter().enumerate() {
            let want = 0.5f64.powi(h as i32) * 4.0 / 3.0;
            for &v in &trace.values {
                assert!((v - want).abs() <= 0.1 * want, "lag {h}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn variance_of_ar1_series() {
        let ser = ar1_shift(0.5, 2000, 2);
        let mean = frechet_mean(&ser).unwrap();
        let v = crate::wasserstein::wasserstein_variance(&ser, &mean).unwrap();
        assert!((v - 4.0 / 3.0).abs() <= 0.1 * 4.0 / 3.0, "{v}");
    }

    #[test]
    fn acf_white_noise_and_ar1() {
        let wn = ar1_shift(0.0, 2000, 3);
        let rho = wasserstein_acf(&wn, 3).unwrap();
        assert_eq!(rho[0], 1.0);
        assert!(rho[1].abs() <= 0.05, "{}", rho[1]);

        let ar = ar1_shift(0.5, 2000, 4);
        let rho = wasserstein_acf(&ar, 3).unwrap();
        assert!((rho[1] - 0.5).abs() <= 0.05);
        assert!((rho[2] - 0.25).abs() <= 0.07);
    }

    #[test]
    fn order_one_fit_is_lag_one_acf() {
        for seed in 0..5 {
            let ser = ar1_shift(0.5, 300, seed);
            let fit = fit_war(&ser, 1).unwrap();
            let rho = wasserstein_acf(&ser, 1).unwrap();
            assert_eq!(fit.beta[0].to_bits(), rho[1].to_bits());
        }
    }

    #[test]
    fn ar1_fit_recovers_beta() {
        let ser = ar1_shift(0.5, 2000, 5);
        let fit = fit_war(&ser, 1).unwrap();
        assert!((fit.beta[0] - 0.5).abs() <= 0.05);
        assert!(fit.causal);
        assert!(fit.gamma_matrix.nrows() == 1 && fit.psi[0] == 1.0);
    }

    #[test]
    fn fit_preconditions() {
        let ser = ar1_shift(0.5, 3, 6);
        assert!(matches!(fit_war(&ser, 2), Err(WarError::InsufficientData(_))));
        assert!(matches!(fit_war(&ser, 0), Err(WarError::InvalidArgument(_))));
    }

    #[test]
    fn gamma_matrix_is_symmetric_psd_toeplitz() {
        let ser = ar1_shift(0.3, 400, 7);
        let fit = fit_war(&ser, 4).unwrap();
        let g = &fit.gamma_matrix;
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g[(i, j)], g[(j, i)]);
                assert_eq!(g[(i, j)], g[(0, i.abs_diff(j))]);
            }
        }
        let eig = g.clone().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-9));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_weights(&[0.0], 3), vec![1.0, 0.0, 0.0, 0.0]);
        let psi = psi_weights(&[0.5], 6);
        for (i, &v) in psi.iter().enumerate() {
            assert_eq!(v, 0.5f64.powi(i as i32));
        }
        assert_eq!(psi_weights(&[0.5, 0.25], 3), vec![1.0, 0.5, 0.5, 0.375]);
    }

    #[test]
    fn causality_examples() {
        let c = check_causality(&[0.5f64]);
        assert!(c.causal);
        assert!((c.root_moduli[0] - 2.0).abs() < 1e-12);
        assert!(!check_causality(&[1.1]).causal);
        assert!(!check_causality(&[1.0]).causal);

        // oracle: bisection for real roots and a direct modulus scan of phi
        let beta = [0.825, -0.1875, 0.0125];
        let c = check_causality(&beta);
        assert!(c.causal);
        let phi = |re: f64, im: f64| {
            // 1 - sum beta_j z^j for complex z
            let (mut zr, mut zi) = (1.0, 0.0);
            let (mut pr, mut pi) = (1.0, 0.0);
            for &b in &beta {
                let nr = zr * re - zi * im;
                let ni = zr * im + zi * re;
                zr = nr;
                zi = ni;
                pr -= b * zr;
                pi -= b * zi;
            }
            (pr * pr + pi * pi).sqrt()
        };
        let mut min_in_disk = f64::INFINITY;
        for a in 0..400 {
            for r in 0..=200 {
                let rad = r as f64 / 200.0;
                let th = a as f64 / 400.0 * std::f64::consts::TAU;
                min_in_disk = min_in_disk.min(phi(rad * th.cos(), rad * th.sin()));
            }
        }
        assert!(min_in_disk > 1e-3);
        for &m in &c.root_moduli {
            assert!(m > 1.0);
        }
    }

    #[test]
    fn trailing_zero_coefficient() {
        let c = check_causality(&[0.5f64, 0.0]);
        assert!(c.causal);
        assert!(c.root_moduli.iter().any(|m| m.is_infinite()));
    }

    #[test]
    fn truncation_meets_tail_tolerance() {
        let beta = [0.5f64, 0.25];
        let psi = truncated_psi(&beta).unwrap();
        let long = psi_weights(&beta, 2000);
        let tail: f64 = long[psi.len()..].iter().map(|v| v.abs()).sum();
        assert!(tail <= 1e-10, "{tail}");
        assert_eq!(truncated_psi(&[1.2]).unwrap_err(), WarError::NonCausal);
    }

    #[test]
    fn near_unit_root_hits_cap() {
        assert_eq!(truncated_psi(&[0.99999999]).unwrap_err(), WarError::PsiTruncation(PSI_MAX_TERMS));
    }

    #[test]
    fn asymptotic_covariance_examples() {
        let sigma = covariance_from_psi(&[1.0], 1, 1.0).unwrap();
        assert_eq!(sigma[(0, 0)], 1.0);

        let beta = [0.5f64, 0.25];
        let psi = truncated_psi(&beta).unwrap();
        let fast = covariance_from_psi(&psi, 2, 1.3).unwrap();
        let direct = covariance_from_psi(&psi_weights(&beta, 1_000_000), 2, 1.3).unwrap();
        assert!((fast - direct).amax() <= 1e-8);
    }

    #[test]
    fn order_one_covariance_identity() {
        let ser = ar1_shift(0.6, 800, 8);
        let fit = fit_war(&ser, 1).unwrap();
        let sig = fit.asym_cov.as_ref().unwrap()[(0, 0)];
        let s2 = fit.innovation.as_ref().unwrap().sigma2_eps;
        assert!((sig - s2 * (1.0 - fit.beta[0] * fit.beta[0])).abs() <= 1e-9);
    }

    #[test]
    fn non_causal_fit_refuses_inference() {
        let s = sgrid();
        // linear trend in location: beta estimate close to 1 and above
        let ser = series_from(&s, |t, x| x + (t as f64) * (t as f64), 30);
        let mut fit = fit_war(&ser, 1).unwrap();
        fit.causal = false;
        assert_eq!(asymptotic_covariance(&fit).unwrap_err(), WarError::NonCausal);
        assert_eq!(acf_asymptotic_covariance(&fit, 2).unwrap_err(), WarError::NonCausal);
    }

    #[test]
    fn innovation_stats_example_one() {
        let ser = ar1_shift(0.5, 2000, 9);
        let fit = fit_war(&ser, 1).unwrap();
        let st = estimate_innovation_stats(&ser, &fit).unwrap();
        assert!((st.sigma2_eps - 1.0).abs() <= 0.15);
        assert!((st.k1 - 1.0).abs() <= 0.15);
        assert!(st.k2.abs() <= 0.15 * 3.0, "k2 = {}", st.k2);
        assert_eq!(st.residual_count, 1999);
    }

    #[test]
    fn innovation_stats_need_residuals() {
        let ser = ar1_shift(0.5, 4, 10);
        let fit = fit_war(&ser, 2).unwrap();
        assert_eq!(estimate_innovation_stats(&ser, &fit).unwrap_err(), WarError::InsufficientResiduals(2));
    }

    #[test]
    fn exact_fit_residuals_are_zero_variance() {
        // alternating shifts are reproduced exactly by beta = -1
        let s = sgrid();
        let flat = series_from(&s, |t, x| x + if t % 2 == 0 { 1.0 } else { -1.0 }, 10);
        let mut f2 = fit_war_with(&flat, 1, FitOptions { inference: false }).unwrap();
        f2.beta = vec![-1.0];
        assert_eq!(estimate_innovation_stats(&flat, &f2).unwrap_err(), WarError::ZeroVariance);
    }

    #[test]
    fn white_noise_acf_band_is_sigma2() {
        let v = acf_covariance_from_psi(&[1.0f64], 3, 1.0, 0.0, 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v[(i, j)] - want).abs() < 1e-15);
            }
        }
        // nonzero K2 does not leak into lags >= 1 under white noise
        let v = acf_covariance_from_psi(&[1.0f64], 2, 2.0, 5.0, 2.0);
        assert!((v[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scale_equivariance() {
        let ser = ar1_shift(0.4, 300, 11);
        let s = ser.grid().clone();
        let moved = DensitySeries::new(
            ser.quantiles()
                .iter()
                .map(|q| QuantileFn::new(s.clone(), q.values().iter().map(|v| 2.5 * v - 1.0).collect()).unwrap())
                .collect(),
        )
        .unwrap();
        let a = fit_war(&ser, 2).unwrap();
        let b = fit_war(&moved, 2).unwrap();
        for (x, y) in a.beta.iter().zip(&b.beta) {
            assert!((x - y).abs() < 1e-10);
        }
        let ra = wasserstein_acf(&ser, 3).unwrap();
        let rb = wasserstein_acf(&moved, 3).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn f32_fit_runs() {
        let ser = ar1_shift(0.5, 500, 12);
        let g32 = Arc::new(Grid::<f32>::probability_default(100).unwrap());
        let qs = ser
            .quantiles()
            .iter()
            .map(|q| QuantileFn::new(g32.clone(), q.values().iter().map(|&v| v as f32).collect()).unwrap())
            .collect();
        let s32 = DensitySeries::new(qs).unwrap();
        let fit = fit_war(&s32, 1).unwrap();
        let fit64 = fit_war(&ser, 1).unwrap();
        assert!((fit.beta[0] as f64 - fit64.beta[0]).abs() < 1e-3);
    }

    fn causal_beta() -> impl Strategy<Value = Vec<f64>> {
        // products of factors (1 - r z) with |r| < 0.9 stay causal
        prop::collection::vec(-0.9..0.9f64, 1..5).prop_map(|roots| {
            let mut poly = vec![1.0];
            for r in roots {
                let mut next = vec![0.0; poly.len() + 1];
                for (i, &c) in poly.iter().enumerate() {
                    next[i] += c;
                    next[i + 1] -= r * c;
                }
                poly = next;
            }
            poly[1..].iter().map(|c| -c).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn psi_convolution_identity(beta in causal_beta()) {
            prop_assert!(check_causality(&beta).causal);
            let psi = truncated_psi(&beta).unwrap();
            let conv = psi_convolution(&psi, &beta);
            prop_assert!((conv[0] - 1.0).abs() <= 1e-12);
            for &c in &conv[1..] {
                prop_assert!(c.abs() <= 1e-12);
            }
        }
    }
}
