//! Simulation of stationary WAR(p) density series.
//!
//! The recursion runs on `X_t(s) = T_t(Q(s)) - Q(s)`, where `Q` is the
//! mean quantile, and returns `Q_t = X_t + Q`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WarError};
use crate::grid::{DensitySeries, Grid, QuantileFn};
use crate::scalar::Scalar;
use crate::war::{check_causality, truncated_psi};

/// Slack on the compatibility bound.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

/// Distribution of the additive innovation level `eta_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EtaDist {
    Normal { sd: f64 },
    /// Uniform on `[-half_width, half_width)`.
    Uniform { half_width: f64 },
}

impl EtaDist {
    fn sample(&self, rng: &mut ChaCha20Rng) -> f64 {
        match *self {
            EtaDist::Normal { sd } if sd > 0.0 => Normal::new(0.0, sd)
                .expect("positive sd")
                .sample(rng),
            EtaDist::Uniform { half_width } if half_width > 0.0 => {
                Uniform::new(-half_width, half_width)
                    .expect("positive width")
                    .sample(rng)
            }
            _ => 0.0,
        }
    }
}

/// The three innovation families. `delta_t` is uniform on
/// `[-delta_bound, delta_bound)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum InnovationModel {
    /// `eps_t(u) = eta_t`.
    Constant { eta: EtaDist },
    /// `eps_t(u) = eta_t + delta_t u`.
    Linear { eta: EtaDist, delta_bound: f64 },
    /// `eps_t(u) = eta_t + sin(delta_t u)`.
    Sinusoidal { eta: EtaDist, delta_bound: f64 },
}

impl InnovationModel {
    /// Bound on `sup |eps_t'|`.
    pub fn bound(&self) -> f64 {
        match *self {
            InnovationModel::Constant { .. } => 0.0,
            InnovationModel::Linear { delta_bound, .. }
            | InnovationModel::Sinusoidal { delta_bound, .. } => delta_bound,
        }
    }

    pub fn eta(&self) -> EtaDist {
        match *self {
            InnovationModel::Constant { eta }
            | InnovationModel::Linear { eta, .. }
            | InnovationModel::Sinusoidal { eta, .. } => eta,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            InnovationModel::Constant { .. } => "constant",
            InnovationModel::Linear { .. } => "linear",
            InnovationModel::Sinusoidal { .. } => "sin",
        }
    }

    /// `eps(u)` for given draws of `eta` and `delta`.
    pub fn evaluate<T: Scalar>(&self, eta: f64, delta: f64, u: &[T]) -> Vec<T> {
        let eta = T::lit(eta);
        let delta = T::lit(delta);
        match self {
            InnovationModel::Constant { .. } => vec![eta; u.len()],
            InnovationModel::Linear { .. } => u.iter().map(|&x| eta + delta * x).collect(),
            InnovationModel::Sinusoidal { .. } => {
                u.iter().map(|&x| eta + (delta * x).sin()).collect()
            }
        }
    }

    fn draw_delta(&self, rng: &mut ChaCha20Rng) -> f64 {
        let b = self.bound();
        if b > 0.0 {
            Uniform::new(-b, b).expect("positive bound").sample(rng)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Scalar> {
    pub beta: Vec<T>,
    pub innovation: InnovationModel,
    pub n: usize,
    pub burn_in: usize,
    pub mean_quantile: QuantileFn<T>,
    pub seed: u64,
    /// Stream index; replicates with distinct indices are independent.
    pub replicate: u64,
}

impl<T: Scalar> SimConfig<T> {
    /// Defaults: burn-in 1000, mean quantile `Q(s) = s` on the 100-interval
    /// grid, seed 0, replicate 0.
    pub fn new(beta: Vec<T>, innovation: InnovationModel, n: usize) -> Self {
        let grid = Arc::new(Grid::probability_default(100).expect("default grid"));
        let mean = QuantileFn::from_fn(grid, |s| s).expect("identity quantile");
        SimConfig {
            beta,
            innovation,
            n,
            burn_in: 1000,
            mean_quantile: mean,
            seed: 0,
            replicate: 0,
        }
    }

    pub fn with_grid(mut self, grid: Arc<Grid<T>>) -> Result<Self> {
        self.mean_quantile = QuantileFn::from_fn(grid, |s| s)?;
        Ok(self)
    }
}

/// Compatibility check `bound <= (sum |psi_i|)^-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility {
    pub compatible: bool,
    /// `(sum |psi_i|)^-1 - bound`.
    pub margin: f64,
    pub limit: f64,
}

pub fn validate_compatibility<T: Scalar>(config: &SimConfig<T>) -> Result<Compatibility> {
    let psi = truncated_psi(&config.beta)?;
    let abs_sum: f64 = psi.iter().map(|v| v.abs().as_f64()).sum();
    let limit = 1.0 / abs_sum;
    let bound = config.innovation.bound();
    Ok(Compatibility {
        compatible: bound <= limit + COMPATIBILITY_TOL,
        margin: limit - bound,
        limit,
    })
}

/// Generator for replicate `replicate` of base seed `seed`.
pub fn stream_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One innovation field evaluated at `u = mean(s)`.
pub fn draw_innovation<T: Scalar>(
    model: &InnovationModel,
    mean: &QuantileFn<T>,
    rng: &mut ChaCha20Rng,
) -> Vec<T> {
    let eta = model.eta().sample(rng);
    let delta = model.draw_delta(rng);
    model.evaluate(eta, delta, mean.values())
}

pub fn simulate_war<T: Scalar>(config: &SimConfig<T>) -> Result<DensitySeries<T>> {
    if !check_causality(&config.beta).causal {
        return Err(WarError::NonCausal);
    }
    let comp = validate_compatibility(config)?;
    if !comp.compatible {
        return Err(WarError::Incompatible {
            bound: config.innovation.bound(),
            limit: comp.limit,
        });
    }
    if config.n == 0 {
        return Err(WarError::EmptySeries);
    }
    let mean = &config.mean_quantile;
    let m = mean.values().len();
    let p = config.beta.len();
    let mut rng = stream_rng(config.seed, config.replicate);
    // history[0] is the most recent state
    let mut history: Vec<Vec<T>> = vec![vec![T::zero(); m]; p.max(1)];
    let mut out = Vec::with_capacity(config.n);
    for t in 0..config.burn_in + config.n {
        let mut x = draw_innovation(&config.innovation, mean, &mut rng);
        for (j, &b) in config.beta.iter().enumerate() {
            for (xi, &h) in x.iter_mut().zip(&history[j]) {
                *xi += b * h;
            }
        }
        if t >= config.burn_in {
            let q: Vec<T> = x.iter().zip(mean.values()).map(|(&a, &b)| a + b).collect();
            out.push(QuantileFn::new(mean.grid().clone(), q)?);
        }
        history.rotate_right(1);
        history[0] = x;
    }
    DensitySeries::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::is_nondecreasing;

    fn sin_model(b: f64) -> InnovationModel {
        InnovationModel::Sinusoidal {
            eta: EtaDist::Normal { sd: 1.0 },
            delta_bound: b,
        }
    }

    #[test]
    fn compatibility_examples() {
        let c = SimConfig::<f64>::new(vec![0.9], InnovationModel::Constant { eta: EtaDist::Normal { sd: 1.0 } }, 10);
        assert!(validate_compatibility(&c).unwrap().compatible);

        let lin = InnovationModel::Linear {
            eta: EtaDist::Normal { sd: 1.0 },
            delta_bound: 0.5,
        };
        let c = SimConfig::<f64>::new(vec![0.5], lin, 10);
        assert!(validate_compatibility(&c).unwrap().compatible);

        let beta = vec![0.825, -0.1875, 0.0125];
        let c = SimConfig::<f64>::new(beta.clone(), sin_model(0.2), 10);
        let comp = validate_compatibility(&c).unwrap();
        // independent oracle: long direct psi sum
        let psi = crate::war::psi_weights(&beta, 5000);
        let limit = 1.0 / psi.iter().map(|v| v.abs()).sum::<f64>();
        assert!((comp.limit - limit).abs() < 1e-9);
        assert!(comp.compatible);

        let c = SimConfig::<f64>::new(vec![0.5], sin_model(0.6), 10);
        assert!(!validate_compatibility(&c).unwrap().compatible);
        assert!(matches!(simulate_war(&c), Err(WarError::Incompatible { .. })));
        let c = SimConfig::<f64>::new(vec![1.2], sin_model(0.0), 10);
        assert_eq!(validate_compatibility(&c).unwrap_err(), WarError::NonCausal);
    }

    #[test]
    fn evaluate_examples() {
        let u = [0.0, 0.5, 1.0];
        let c = InnovationModel::Constant { eta: EtaDist::Normal { sd: 1.0 } };
        assert_eq!(c.evaluate::<f64>(0.7, 0.0, &u), vec![0.7; 3]);
        let s = sin_model(0.2).evaluate::<f64>(0.0, 0.2, &u);
        assert_eq!(s[2], 0.2f64.sin());
        assert!(s.iter().all(|v| v.abs() <= 0.2f64.sin()));
    }

    #[test]
    fn innovations_are_mean_zero() {
        let mean = SimConfig::<f64>::new(vec![0.0], sin_model(0.2), 1).mean_quantile;
        let mut rng = stream_rng(1, 0);
        let draws = 100_000;
        let mut acc = vec![0.0; mean.values().len()];
        for _ in 0..draws {
            for (a, v) in acc.iter_mut().zip(draw_innovation(&sin_model(0.2), &mean, &mut rng)) {
                *a += v;
            }
        }
        assert!(acc.iter().all(|a| (a / draws as f64).abs() <= 0.02));
    }

    #[test]
    fn zero_innovations_give_mean() {
        let model = InnovationModel::Constant { eta: EtaDist::Normal { sd: 0.0 } };
        let c = SimConfig::<f64>::new(vec![0.5], model, 20);
        let ser = simulate_war(&c).unwrap();
        for q in ser.quantiles() {
            assert_eq!(q.values(), c.mean_quantile.values());
        }
    }

    #[test]
    fn reproducible_and_stream_separated() {
        let mut c = SimConfig::<f64>::new(vec![0.825, -0.1875, 0.0125], sin_model(0.2), 50);
        c.seed = 7;
        let a = simulate_war(&c).unwrap();
        let b = simulate_war(&c).unwrap();
        assert_eq!(a, b);
        c.replicate = 1;
        let d = simulate_war(&c).unwrap();
        assert_ne!(a.get(0).values(), d.get(0).values());
    }

    #[test]
    fn stationary_mean_near_zero() {
        let mut c = SimConfig::<f64>::new(vec![0.825, -0.1875, 0.0125], sin_model(0.2), 5000);
        c.seed = 3;
        let ser = simulate_war(&c).unwrap();
        let m = c.mean_quantile.values();
        // long-run sd of the sample mean: sd(eps) * sum(psi) / sqrt(n)
        let psi_sum: f64 = crate::war::psi_weights(&c.beta, 2000).iter().sum();
        let eps_sd = (1.0f64 + 0.2f64.powi(2) / 3.0).sqrt();
        let se = eps_sd * psi_sum / 5000f64.sqrt();
        for k in 0..m.len() {
            let avg: f64 = ser.quantiles().iter().map(|q| q.values()[k] - m[k]).sum::<f64>() / 5000.0;
            assert!(avg.abs() <= 3.0 * se, "s index {k}: {avg}");
        }
    }

    #[test]
    fn simulated_quantiles_monotone() {
        for (beta, model) in [
            (vec![0.825, -0.1875, 0.0125], sin_model(0.2)),
            (vec![0.5], InnovationModel::Linear { eta: EtaDist::Uniform { half_width: 1.0 }, delta_bound: 0.5 }),
            (vec![-0.4, 0.2], sin_model(0.35)),
        ] {
            let mut c = SimConfig::<f64>::new(beta, model, 500);
            c.seed = 11;
            let ser = simulate_war(&c).unwrap();
            assert!(ser.quantiles().iter().all(|q| is_nondecreasing(q.values())));
        }
    }

    #[test]
    fn long_run_recovers_beta() {
        let beta = [0.825, -0.1875, 0.0125];
        let mut c = SimConfig::<f64>::new(beta.to_vec(), sin_model(0.2), 10_000);
        c.seed = 5;
        let ser = simulate_war(&c).unwrap();
        let fit = crate::war::fit_war(&ser, 3).unwrap();
        let se = fit.asym_cov.as_ref().unwrap();
        for j in 0..3 {
            let sd = (se[(j, j)] / 10_000.0).sqrt();
            assert!((fit.beta[j] - beta[j]).abs() <= 3.0 * sd, "beta_{j}");
        }
    }
}
