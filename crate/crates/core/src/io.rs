//! Text formats: series, density and forecast CSV, raw samples, score
//! tables and fit JSON.
//!
//! Numbers are written with 17 significant digits so every `f64` survives a
//! write/read cycle bit for bit.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WarError};
use crate::ffwar::{FfwarFit, FpcaBasis};
use crate::forecast::DistributionForecast;
use crate::grid::{DensityFn, DensitySeries, Grid, QuantileFn};
use crate::scalar::Scalar;
use crate::select::BacktestScore;
use crate::war::{check_causality, WarFit};

/// Full-precision text for one number.
pub fn fmt_num<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn parse_num<T: Scalar>(field: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| WarError::Parse(format!("line {line}: '{field}' is not a number")))
}

fn write_row<W: Write>(w: &mut W, label: &str, values: impl Iterator<Item = String>) -> Result<()> {
    let mut line = String::from(label);
    for v in values {
        line.push(',');
        line.push_str(&v);
    }
    line.push('\n');
    w.write_all(line.as_bytes())?;
    Ok(())
}

/// Labelled rows under a header `tag,<x_1>,...,<x_m>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    pub points: Vec<T>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<T>>,
}

/// Reads a CSV whose first header field must equal `tag`.
pub fn read_table<T: Scalar, R: Read>(r: R, tag: &str) -> Result<Table<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| WarError::Parse("empty file".into()))??;
    if header.get(0).map(str::trim) != Some(tag) {
        return Err(WarError::Parse(format!("header must start with '{tag}'")));
    }
    let points = header
        .iter()
        .skip(1)
        .map(|f| parse_num(f, 1))
        .collect::<Result<Vec<T>>>()?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != points.len() + 1 {
            return Err(WarError::Parse(format!(
                "line {line}: expected {} fields, got {}",
                points.len() + 1,
                rec.len()
            )));
        }
        labels.push(rec[0].trim().to_string());
        rows.push(rec.iter().skip(1).map(|f| parse_num(f, line)).collect::<Result<_>>()?);
    }
    Ok(Table { points, labels, rows })
}

pub fn write_series_csv<T: Scalar, W: Write>(mut w: W, series: &DensitySeries<T>) -> Result<()> {
    write_row(&mut w, "s", series.grid().points().iter().map(|&x| fmt_num(x)))?;
    for (t, q) in series.quantiles().iter().enumerate() {
        let label = match series.timestamps() {
            Some(ts) => ts[t].clone(),
            None => t.to_string(),
        };
        write_row(&mut w, &label, q.values().iter().map(|&x| fmt_num(x)))?;
    }
    Ok(())
}

pub fn read_series_csv<T: Scalar, R: Read>(r: R) -> Result<DensitySeries<T>> {
    let table = read_table::<T, _>(r, "s")?;
    let grid = Arc::new(Grid::probability(table.points)?);
    DensitySeries::from_rows(grid, table.rows)?.with_timestamps(table.labels)
}

pub fn write_density_csv<T: Scalar, W: Write>(
    mut w: W,
    rows: &[(String, DensityFn<T>)],
) -> Result<()> {
    let first = match rows.first() {
        Some((_, f)) => f.grid().clone(),
        None => return Err(WarError::EmptySeries),
    };
    if rows.iter().any(|(_, f)| !f.grid().same_as(&first)) {
        return Err(WarError::GridMismatch);
    }
    write_row(&mut w, "u", first.points().iter().map(|&x| fmt_num(x)))?;
    for (label, f) in rows {
        write_row(&mut w, label, f.values().iter().map(|&x| fmt_num(x)))?;
    }
    Ok(())
}

/// Raw samples: one row per time point, first field the timestamp, no
/// header. Blank fields are ignored.
pub fn read_raw_samples<T: Scalar, R: Read>(r: R) -> Result<Vec<(String, Vec<T>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let Some(label) = rec.get(0) else { continue };
        let samples = rec
            .iter()
            .skip(1)
            .filter(|f| !f.trim().is_empty())
            .map(|f| parse_num(f, i + 1))
            .collect::<Result<Vec<T>>>()?;
        out.push((label.trim().to_string(), samples));
    }
    Ok(out)
}

/// Which curve of a forecast to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastCurve {
    Density,
    Cdf,
}

/// Forecast CSV: header `u,...`, one `step_l` row per horizon. All
/// forecasts must share a support grid.
pub fn write_forecast_csv<T: Scalar, W: Write>(
    mut w: W,
    forecasts: &[DistributionForecast<T>],
    curve: ForecastCurve,
) -> Result<()> {
    let grid = match forecasts.first() {
        Some(f) => f.u_grid().clone(),
        None => return Err(WarError::EmptySeries),
    };
    if forecasts.iter().any(|f| !f.u_grid().same_as(&grid)) {
        return Err(WarError::GridMismatch);
    }
    write_row(&mut w, "u", grid.points().iter().map(|&x| fmt_num(x)))?;
    for f in forecasts {
        let values = match curve {
            ForecastCurve::Density => f.density.values(),
            ForecastCurve::Cdf => &f.cdf,
        };
        write_row(&mut w, &format!("step_{}", f.horizon), values.iter().map(|&x| fmt_num(x)))?;
    }
    Ok(())
}

/// Score table with columns `method,p,K,R,score`. `R` is blank for WAR.
pub fn write_score_table<T: Scalar, W: Write>(mut w: W, table: &[BacktestScore<T>]) -> Result<()> {
    w.write_all(b"method,p,K,R,score\n")?;
    for row in table {
        let r = row.spec.fraction().map(fmt_num).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", row.spec.method(), row.p, row.k, r, fmt_num(row.score))?;
    }
    Ok(())
}

/// ACF table `lag,acf` with optional symmetric band half-widths.
pub fn write_acf_csv<T: Scalar, W: Write>(mut w: W, acf: &[T], band: Option<&[T]>) -> Result<()> {
    if let Some(b) = band {
        if b.len() != acf.len() {
            return Err(WarError::LengthMismatch {
                expected: acf.len(),
                got: b.len(),
            });
        }
        w.write_all(b"lag,acf,lower,upper\n")?;
        for (h, (&a, &hw)) in acf.iter().zip(b).enumerate() {
            writeln!(w, "{h},{},{},{}", fmt_num(a), fmt_num(a - hw), fmt_num(a + hw))?;
        }
    } else {
        w.write_all(b"lag,acf\n")?;
        for (h, &a) in acf.iter().enumerate() {
            writeln!(w, "{h},{}", fmt_num(a))?;
        }
    }
    Ok(())
}

/// Serialized fit. The FFWAR variant leaves the WAR-only fields empty and
/// fills the trailing optional ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub model: String,
    pub order: usize,
    pub beta: Vec<f64>,
    pub grid: Vec<f64>,
    pub mean_quantile: Vec<f64>,
    pub lambda_traces: Vec<Vec<f64>>,
    pub sigma2_eps: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub psi: Vec<f64>,
    pub asym_cov: Option<Vec<Vec<f64>>>,
    pub causal: Option<bool>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenfunctions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_coefficients: Option<Vec<Vec<Vec<f64>>>>,
}

fn vec64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn rows64<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].as_f64()).collect()).collect()
}

fn from64<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn matrix_from_rows<T: Scalar>(rows: &[Vec<f64>]) -> Result<DMatrix<T>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(WarError::Parse("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| T::lit(rows[i][j])))
}

impl FitRecord {
    pub fn from_war<T: Scalar>(fit: &WarFit<T>) -> Self {
        let inn = fit.innovation.as_ref();
        FitRecord {
            model: "war".into(),
            order: fit.order,
            beta: vec64(&fit.beta),
            grid: vec64(fit.mean_quantile.grid().points()),
            mean_quantile: vec64(fit.mean_quantile.values()),
            lambda_traces: fit.traces.iter().map(|t| vec64(&t.values)).collect(),
            sigma2_eps: inn.map(|i| i.sigma2_eps.as_f64()),
            k1: inn.map(|i| i.k1.as_f64()),
            k2: inn.map(|i| i.k2.as_f64()),
            psi: vec64(&fit.psi),
            asym_cov: fit.asym_cov.as_ref().map(rows64),
            causal: Some(fit.causal),
            r: None,
            eigenvalues: None,
            eigenfunctions: None,
            var_coefficients: None,
        }
    }

    pub fn from_ffwar<T: Scalar>(fit: &FfwarFit<T>) -> Self {
        FitRecord {
            model: "ffwar".into(),
            order: fit.order,
            beta: Vec::new(),
            grid: vec64(fit.mean_quantile.grid().points()),
            mean_quantile: vec64(fit.mean_quantile.values()),
            lambda_traces: Vec::new(),
            sigma2_eps: None,
            k1: None,
            k2: None,
            psi: Vec::new(),
            asym_cov: None,
            causal: None,
            r: Some(fit.basis.target.as_f64()),
            eigenvalues: Some(vec64(&fit.basis.eigenvalues)),
            eigenfunctions: Some(fit.basis.eigenfunctions.iter().map(|e| vec64(e)).collect()),
            var_coefficients: Some(fit.coefficients.iter().map(rows64).collect()),
        }
    }

    fn mean_quantile<T: Scalar>(&self) -> Result<QuantileFn<T>> {
        let grid = Arc::new(Grid::probability(from64(&self.grid))?);
        QuantileFn::new(grid, from64(&self.mean_quantile))
    }

    /// Rebuilds a WAR fit sufficient for forecasting. Inference fields
    /// are not restored.
    pub fn to_war<T: Scalar>(&self) -> Result<WarFit<T>> {
        if self.model != "war" {
            return Err(WarError::InvalidArgument(format!("fit is a '{}' model", self.model)));
        }
        if self.beta.len() != self.order || self.order == 0 {
            return Err(WarError::Parse("beta length must equal order".into()));
        }
        let mean = self.mean_quantile::<T>()?;
        let series = DensitySeries::new(vec![mean])?;
        let mut fit = WarFit::mean_only(&series, self.order)?;
        fit.beta = from64(&self.beta);
        let c = check_causality(&fit.beta);
        fit.causal = c.causal;
        fit.root_moduli = c.root_moduli;
        fit.psi = from64(&self.psi);
        fit.degenerate = fit.beta.iter().all(|b| *b == T::zero());
        fit.n_obs = 0;
        Ok(fit)
    }

    pub fn to_ffwar<T: Scalar>(&self) -> Result<FfwarFit<T>> {
        if self.model != "ffwar" {
            return Err(WarError::InvalidArgument(format!("fit is a '{}' model", self.model)));
        }
        let missing = |f: &str| WarError::Parse(format!("ffwar fit lacks '{f}'"));
        let mean = self.mean_quantile::<T>()?;
        let eigenfunctions: Vec<Vec<T>> = self
            .eigenfunctions
            .as_ref()
            .ok_or_else(|| missing("eigenfunctions"))?
            .iter()
            .map(|v| from64(v))
            .collect();
        let eigenvalues: Vec<T> = from64(self.eigenvalues.as_ref().ok_or_else(|| missing("eigenvalues"))?);
        let coefficients = self
            .var_coefficients
            .as_ref()
            .ok_or_else(|| missing("var_coefficients"))?
            .iter()
            .map(|a| matrix_from_rows(a))
            .collect::<Result<Vec<DMatrix<T>>>>()?;
        let m = eigenfunctions.len();
        if coefficients.len() != self.order
            || coefficients.iter().any(|a| a.nrows() != m || a.ncols() != m)
            || eigenfunctions.iter().any(|e| e.len() != self.grid.len())
        {
            return Err(WarError::Parse("inconsistent ffwar dimensions".into()));
        }
        let total = eigenvalues.iter().fold(T::zero(), |a, &b| a + b);
        let kept = eigenvalues.iter().take(m).fold(T::zero(), |a, &b| a + b);
        let fraction = if total > T::zero() { kept / total } else { T::one() };
        Ok(FfwarFit {
            order: self.order,
            basis: FpcaBasis {
                grid: mean.grid().clone(),
                eigenfunctions,
                eigenvalues,
                retained: m,
                fraction,
                target: T::lit(self.r.ok_or_else(|| missing("R"))?),
            },
            coefficients,
            mean_quantile: mean,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
