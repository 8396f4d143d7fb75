use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use war_core::io::{
    fmt_num, read_raw_samples, read_series_csv, write_acf_csv, write_forecast_csv,
    write_score_table, write_series_csv, FitRecord, ForecastCurve,
};
use war_core::kde::resolve_bandwidth;
use war_core::war::{fit_war_or_mean, FitOptions};
use war_core::{
    acf_asymptotic_covariance, density_to_quantile, fit_ffwar, fit_war, forecast_ffwar,
    forecast_multi, kde_estimate, on_common_grid, select_ffwar, select_order_window, simulate_war,
    wasserstein_acf, Bandwidth, DensitySeries, DistributionForecast, EtaDist, Grid,
    InnovationModel, MetricTag, SimConfig, WarError,
};

use crate::args::*;
use crate::error::{CliError, CliResult};

/// Files read and written by a command, for the manifest.
#[derive(Debug, Default)]
pub struct Io {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data("io-error", format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data("io-error", format!("{}: {e}", path.display())))
}

fn load_series(path: &Path) -> CliResult<DensitySeries<f64>> {
    Ok(read_series_csv(open(path)?)?)
}

fn save_series(path: &Path, series: &DensitySeries<f64>) -> CliResult<()> {
    let mut w = create(path)?;
    write_series_csv(&mut w, series)?;
    w.flush()?;
    Ok(())
}

/// `LO:HI` with `LO < HI`.
pub fn parse_range(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::usage(format!("expected LO:HI, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Orders as `A:B` (inclusive) or a comma list.
pub fn parse_orders(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::usage(format!("bad order list '{s}'"));
    let out: Vec<usize> = if let Some((a, b)) = s.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn innovation_model(a: &InnovationArgs) -> CliResult<InnovationModel> {
    let eta = match a.eta_uniform {
        Some(w) if w > 0.0 => EtaDist::Uniform { half_width: w },
        Some(w) => return Err(CliError::usage(format!("--eta-uniform must be positive, got {w}"))),
        None if a.eta_sd >= 0.0 => EtaDist::Normal { sd: a.eta_sd },
        None => return Err(CliError::usage("--eta-sd must be nonnegative")),
    };
    if !(a.delta_bound >= 0.0) {
        return Err(CliError::usage("--delta-bound must be nonnegative"));
    }
    Ok(match a.innovation {
        InnovationKind::Constant => InnovationModel::Constant { eta },
        InnovationKind::Linear => InnovationModel::Linear {
            eta,
            delta_bound: a.delta_bound,
        },
        InnovationKind::Sin => InnovationModel::Sinusoidal {
            eta,
            delta_bound: a.delta_bound,
        },
    })
}

fn sim_config(
    beta: &[f64],
    inn: &InnovationArgs,
    n: usize,
    burn_in: usize,
    grid: usize,
    seed: u64,
) -> CliResult<SimConfig<f64>> {
    let mut cfg = SimConfig::new(beta.to_vec(), innovation_model(inn)?, n)
        .with_grid(Arc::new(Grid::probability_default(grid)?))?;
    cfg.burn_in = burn_in;
    cfg.seed = seed;
    Ok(cfg)
}

pub fn densify(a: &DensifyArgs, io: &mut Io) -> CliResult<()> {
    io.inputs.push(a.input.clone());
    let bandwidth: Bandwidth<f64> = a.bandwidth.parse()?;
    let clip = a.clip.as_deref().map(parse_range).transpose()?;
    if a.support_points < 3 {
        return Err(CliError::usage("--support-points must be at least 3"));
    }
    let s = Arc::new(Grid::probability_default(a.grid)?);
    let raw = read_raw_samples::<f64, _>(open(&a.input)?)?;
    let mut labels = Vec::new();
    let mut quantiles = Vec::new();
    for (label, mut samples) in raw {
        if samples.len() < 2 {
            eprintln!("warning: row '{label}' has {} samples; skipped", samples.len());
            continue;
        }
        if let Some((lo, hi)) = clip {
            samples.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
        }
        let h = resolve_bandwidth(&samples, bandwidth)?;
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &x| (l.min(x), u.max(x)));
        let u = Arc::new(Grid::uniform_support(lo - 5.0 * h, hi + 5.0 * h, a.support_points)?);
        let f = kde_estimate(&samples, &u, Bandwidth::Fixed(h))?;
        quantiles.push(density_to_quantile(&f, &s)?);
        labels.push(label);
    }
    if quantiles.is_empty() {
        return Err(WarError::EmptySeries.into());
    }
    let series = DensitySeries::new(quantiles)?.with_timestamps(labels)?;
    save_series(&a.output, &series)?;
    io.outputs.push(a.output.clone());
    Ok(())
}

pub fn simulate(a: &SimulateArgs, io: &mut Io) -> CliResult<()> {
    let mut cfg = sim_config(&a.beta, &a.innovation, a.n, a.burn_in, a.grid, a.seed)?;
    cfg.replicate = a.replicate;
    io.seed = Some(a.seed);
    let series = simulate_war(&cfg)?;
    save_series(&a.output, &series)?;
    io.outputs.push(a.output.clone());
    Ok(())
}

pub fn fit(a: &FitArgs, io: &mut Io) -> CliResult<()> {
    io.inputs.push(a.input.clone());
    let series = load_series(&a.input)?;
    let record = match a.model {
        ModelKind::War => {
            let opts = FitOptions {
                inference: !a.no_inference,
            };
            FitRecord::from_war(&fit_war_or_mean(&series, a.order, opts)?)
        }
        ModelKind::Ffwar => FitRecord::from_ffwar(&fit_ffwar(&series, a.order, a.fraction)?),
    };
    fs::write(&a.output, record.to_json()? + "\n")?;
    io.outputs.push(a.output.clone());
    Ok(())
}

fn default_support(series: &DensitySeries<f64>) -> (f64, f64) {
    series.quantiles().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), q| {
        let (a, b) = q.extended_support();
        (l.min(a), u.max(b))
    })
}

fn ffwar_steps(
    record: &FitRecord,
    series: &DensitySeries<f64>,
    steps: usize,
    u: &Arc<Grid<f64>>,
) -> CliResult<Vec<DistributionForecast<f64>>> {
    let fit = record.to_ffwar::<f64>()?;
    let mut hist = series.clone();
    let mut out = Vec::with_capacity(steps);
    for step in 1..=steps {
        let mut fc = forecast_ffwar(&fit, &hist, u)?;
        fc.horizon = step;
        let next = match &fc.quantile {
            Some(q) => q.clone(),
            None => war_core::cdf_to_quantile(fc.u_grid(), &fc.cdf, series.grid())
                .map_err(|_| WarError::ForecastDegenerate { step })?,
        };
        hist.push(next)?;
        out.push(fc);
    }
    Ok(out)
}

pub fn forecast(a: &ForecastArgs, io: &mut Io) -> CliResult<()> {
    io.inputs.push(a.fit.clone());
    io.inputs.push(a.input.clone());
    if a.steps == 0 {
        return Err(CliError::usage("--steps must be at least 1"));
    }
    let text = fs::read_to_string(&a.fit)
        .map_err(|e| CliError::data("io-error", format!("{}: {e}", a.fit.display())))?;
    let record = FitRecord::from_json(&text)?;
    let series = load_series(&a.input)?;
    let (lo, hi) = match a.support.as_deref() {
        Some(r) => parse_range(r)?,
        None => default_support(&series),
    };
    let u = Arc::new(war_core::grid::padded_support(lo, hi, 0.05, a.support_points)?);
    let forecasts = match record.model.as_str() {
        "war" => forecast_multi(&record.to_war::<f64>()?, &series, a.steps, &u)?,
        "ffwar" => ffwar_steps(&record, &series, a.steps, &u)?,
        other => return Err(CliError::data("parse-error", format!("unknown model '{other}'"))),
    };
    let forecasts = on_common_grid(series.grid(), &forecasts)?;
    let mut w = create(&a.output)?;
    write_forecast_csv(&mut w, &forecasts, ForecastCurve::Density)?;
    w.flush()?;
    io.outputs.push(a.output.clone());
    if let Some(path) = &a.cdf_output {
        let mut w = create(path)?;
        write_forecast_csv(&mut w, &forecasts, ForecastCurve::Cdf)?;
        w.flush()?;
        io.outputs.push(path.clone());
    }
    Ok(())
}

pub fn acf(a: &AcfArgs, io: &mut Io) -> CliResult<()> {
    io.inputs.push(a.input.clone());
    let series = load_series(&a.input)?;
    let rho = wasserstein_acf(&series, a.max_lag)?;
    let band = if a.ci && a.max_lag > 0 {
        let fit = fit_war(&series, a.order)?;
        let cov = acf_asymptotic_covariance(&fit, a.max_lag)?;
        let n = series.len() as f64;
        let mut b = vec![0.0];
        b.extend((0..a.max_lag).map(|i| 1.96 * (cov[(i, i)].max(0.0) / n).sqrt()));
        Some(b)
    } else {
        None
    };
    let mut w = create(&a.output)?;
    write_acf_csv(&mut w, &rho, band.as_deref())?;
    w.flush()?;
    io.outputs.push(a.output.clone());
    Ok(())
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))
}

#[derive(Serialize)]
struct SelectionSummary {
    method: &'static str,
    metric: String,
    p: usize,
    k: usize,
    r: Option<f64>,
    score: f64,
}

pub fn backtest(a: &BacktestArgs, io: &mut Io) -> CliResult<()> {
    io.inputs.push(a.input.clone());
    let metric: MetricTag = a.metric.parse()?;
    let series = load_series(&a.input)?;
    let sel = pool(a.jobs)?.install(|| match a.model {
        ModelKind::War => {
            let orders = parse_orders(&a.orders)?;
            Ok::<_, CliError>(select_order_window(&series, &orders, &a.windows, metric)?)
        }
        ModelKind::Ffwar => Ok(select_ffwar(&series, &a.fractions, &a.windows, metric)?),
    })?;
    let mut w = create(&a.output)?;
    write_score_table(&mut w, &sel.table)?;
    w.flush()?;
    io.outputs.push(a.output.clone());
    let summary = SelectionSummary {
        method: if a.model == ModelKind::War { "war" } else { "ffwar" },
        metric: metric.to_string(),
        p: sel.p,
        k: sel.k,
        r: sel.r,
        score: sel.score,
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(())
}

pub fn montecarlo(a: &MontecarloArgs, io: &mut Io) -> CliResult<()> {
    io.seed = Some(a.seed);
    let p = a.order.unwrap_or(a.beta.len());
    if p == 0 || a.replicates == 0 {
        return Err(CliError::usage("--order and --replicates must be positive"));
    }
    let base = sim_config(&a.beta, &a.innovation, a.n, a.burn_in, a.grid, a.seed)?;
    // fail fast on an invalid design before spawning replicates
    war_core::validate_compatibility(&base)?;
    let rows: Vec<Result<Vec<f64>, String>> = pool(a.jobs)?.install(|| {
        (0..a.replicates)
            .into_par_iter()
            .map(|r| {
                let mut cfg = base.clone();
                cfg.replicate = r;
                let series = simulate_war(&cfg).map_err(|e| e.to_string())?;
                let fit = fit_war(&series, p).map_err(|e| e.to_string())?;
                Ok(fit.beta)
            })
            .collect()
    });
    if let Some(Err(e)) = rows.first().filter(|_| rows.iter().all(Result::is_err)) {
        return Err(CliError {
            code: crate::error::EXIT_NUMERIC,
            error: "monte-carlo".into(),
            message: format!("every replicate failed, first: {e}"),
        });
    }
    let mut w = create(&a.output)?;
    let header: Vec<String> = (1..=p).map(|j| format!("beta_{j}")).collect();
    writeln!(w, "replicate,{},status", header.join(","))?;
    for (r, row) in rows.iter().enumerate() {
        match row {
            Ok(beta) => {
                let vals: Vec<String> = beta.iter().map(|&b| fmt_num(b)).collect();
                writeln!(w, "{r},{},ok", vals.join(","))?;
            }
            Err(e) => {
                let blanks = vec![""; p].join(",");
                writeln!(w, "{r},{blanks},\"{}\"", e.replace('"', "'"))?;
            }
        }
    }
    w.flush()?;
    io.outputs.push(a.output.clone());
    let fitted: Vec<&Vec<f64>> = rows.iter().filter_map(|r| r.as_ref().ok()).collect();
    let m = fitted.len() as f64;
    let summary: Vec<serde_json::Value> = (0..p)
        .map(|j| {
            let truth = a.beta.get(j).copied().unwrap_or(0.0);
            let mean = fitted.iter().map(|b| b[j]).sum::<f64>() / m;
            let var = fitted.iter().map(|b| (b[j] - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            serde_json::json!({
                "coefficient": j + 1,
                "bias": mean - truth,
                "sd": var.sqrt(),
                "rmse": ((mean - truth).powi(2) + var).sqrt(),
            })
        })
        .collect();
    println!(
        "{}",
        serde_json::json!({ "replicates": a.replicates, "succeeded": fitted.len(), "coefficients": summary })
    );
    Ok(())
}
