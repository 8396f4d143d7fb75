use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use war_core::io::{read_series_csv, write_series_csv};
use war_core::*;

fn sin_config(beta: Vec<f64>, n: usize, seed: u64) -> SimConfig64 {
    let mut cfg = SimConfig::new(
        beta,
        InnovationModel::Sinusoidal {
            eta: EtaDist::Normal { sd: 1.0 },
            delta_bound: 0.2,
        },
        n,
    );
    cfg.seed = seed;
    cfg
}

#[test]
fn raw_samples_to_forecast() {
    // 305 days of 78 intraday draws whose scale follows an AR(1)
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let s = Arc::new(Grid64::probability_default(100).unwrap());
    let mut log_scale = 0.0f64;
    let mut quantiles = Vec::new();
    for _ in 0..305 {
        log_scale = 0.6 * log_scale + noise.sample(&mut rng);
        let day = Normal::new(0.0, log_scale.exp()).unwrap();
        let samples: Vec<f64> = (0..78).map(|_| day.sample(&mut rng)).collect();
        let u = Arc::new(Grid::uniform_support(-8.0, 8.0, 801).unwrap());
        let f = kde_estimate(&samples, &u, Bandwidth::Silverman).unwrap();
        quantiles.push(density_to_quantile(&f, &s).unwrap());
    }
    let series = DensitySeries::new(quantiles).unwrap();
    assert_eq!(series.len(), 305);
    let fit = fit_war(&series, 2).unwrap();
    assert!(fit.causal);
    let u = Arc::new(Grid::uniform_support(-6.0, 6.0, 401).unwrap());
    let fc = forecast_one(&fit, &series, &u).unwrap();
    let mass = integrate(fc.density.values(), fc.u_grid()).unwrap();
    assert!((mass - 1.0).abs() <= 1e-3);
}

#[test]
fn csv_round_trip_preserves_fit() {
    let series = simulate_war(&sin_config(vec![0.6, -0.2], 300, 11)).unwrap();
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &series).unwrap();
    let back: DensitySeries64 = read_series_csv(buf.as_slice()).unwrap();
    assert_eq!(fit_war(&back, 2).unwrap(), fit_war(&series, 2).unwrap());
}

#[test]
fn single_precision_agrees_with_double() {
    let cfg64 = sin_config(vec![0.5], 1000, 4);
    let s32 = Arc::new(Grid32::probability_default(100).unwrap());
    let mut cfg32 = SimConfig32::new(vec![0.5f32], cfg64.innovation, 1000).with_grid(s32).unwrap();
    cfg32.seed = 4;
    let b64 = fit_war(&simulate_war(&cfg64).unwrap(), 1).unwrap().beta[0];
    let b32 = fit_war(&simulate_war(&cfg32).unwrap(), 1).unwrap().beta[0];
    assert!((b64 - b32 as f64).abs() < 1e-3, "{b64} vs {b32}");
}

#[test]
fn long_simulation_recovers_beta() {
    let beta = [0.825, -0.1875, 0.0125];
    let fit = fit_war(&simulate_war(&sin_config(beta.to_vec(), 10_000, 21)).unwrap(), 3).unwrap();
    let cov = asymptotic_covariance(&fit).unwrap();
    for j in 0..3 {
        let se = (cov[(j, j)] / 10_000.0).sqrt();
        assert!((fit.beta[j] - beta[j]).abs() <= 3.0 * se, "beta_{j}: {} (se {se})", fit.beta[j]);
    }
}

#[test]
fn parsimony_wins_on_average() {
    // WAR(1) data: the true order should usually backtest no worse than p = 5
    let wins = (0..100u64)
        .filter(|&r| {
            let mut cfg = sin_config(vec![0.5], 50, 9);
            cfg.replicate = r;
            let series = simulate_war(&cfg).unwrap();
            let score = |p| rolling_backtest(&series, ModelSpec::War, MetricTag::Wasserstein, p, 20).unwrap().score;
            score(1) <= score(5)
        })
        .count();
    assert!(wins >= 70, "p = 1 won {wins} of 100");
}
