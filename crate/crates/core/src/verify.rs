//! Monte-Carlo check of the debiased estimator's log-bias against its
//! closed-form bound.
//!
//! For sample sizes `(m, n)` the experiment draws `m` wild labels from `Q` and
//! `n` positives from `P⁺`, forms the finite-sample debiased score and
//! compares it with the exact large-sample score:
//!
//! ```text
//! δ = |ln S_limit − ln S_debiased|
//! E[δ] ≤ 1/(1−τ)·√(π e^{3κ} / 2m) + τ/(1−τ)·√(π e^{3κ} / 2n)
//! ```
//!
//! λ is a fixed constant here, not tied to `m`. Only the label counts matter
//! for the sample means, so each draw of `m` labels is realized as one
//! multinomial count vector (sequential binomials), which has the same law as
//! `m` i.i.d. categorical draws.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::oracle::{exact_neg_mean, DiscreteLabelSpace};
use crate::rng::{derive_seed, stream_rng, STREAM_VERIFY};
use crate::scoring::{debiased_from_masses, score_asymptotic_unbiased};
use crate::{Error, Result};

/// Minimum number of trials per grid point.
pub const MIN_TRIALS: usize = 100;

/// Floor on the corrected negative mass inside the experiment.
const MASS_FLOOR: f64 = 1e-12;

/// Closed-form bound on `E[δ]`.
pub fn bias_bound(kappa: f64, tau: f64, m: usize, n: usize) -> f64 {
    let c = core::f64::consts::PI * libm::exp(3.0 * kappa) / 2.0;
    libm::sqrt(c / m as f64) / (1.0 - tau) + tau / (1.0 - tau) * libm::sqrt(c / n as f64)
}

/// Label counts of `draws` i.i.d. categorical samples from `weights`.
pub fn multinomial_counts<R: Rng + ?Sized>(weights: &[f64], draws: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; weights.len()];
    let mut remaining = draws;
    let mut mass_left: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let w = w.max(0.0);
        if i + 1 == weights.len() || mass_left <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let p = (w / mass_left).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, p).map_or(0, |b| b.sample(rng));
        counts[i] = c;
        remaining -= c;
        mass_left -= w;
    }
    counts
}

fn sample_exp_mean<R: Rng + ?Sized>(weights: &[f64], exp_aff: &[f64], draws: usize, rng: &mut R) -> f64 {
    let counts = multinomial_counts(weights, draws as u64, rng);
    counts.iter().zip(exp_aff).map(|(&c, &e)| c as f64 * e).sum::<f64>() / draws as f64
}

/// One realization of `δ` for sample sizes `m` (wild) and `n` (positives).
pub fn sample_delta<R: Rng + ?Sized>(
    space: &DiscreteLabelSpace,
    x_aff: &[f64],
    id_aff: &[f64],
    m: usize,
    n: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidGrid);
    }
    let limit = score_asymptotic_unbiased(id_aff, exact_neg_mean(space, x_aff)?, lambda)?;
    let exp_aff: Vec<f64> = x_aff.iter().map(|&a| libm::exp(a)).collect();
    let wild_mean = sample_exp_mean(space.q_weights(), &exp_aff, m, rng);
    let pos_mean = sample_exp_mean(space.pplus_weights(), &exp_aff, n, rng);
    let id_mass: f64 = id_aff.iter().map(|&a| libm::exp(a)).sum();
    let est = debiased_from_masses(id_mass, wild_mean, pos_mean, space.tau(), lambda, MASS_FLOOR);
    Ok((libm::log(limit) - libm::log(est.score)).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasExperimentConfig {
    pub kappa: f64,
    pub lambda: f64,
    /// `(m, n)` sample sizes.
    pub grid: Vec<(usize, usize)>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasExperimentReport {
    pub kappa: f64,
    pub tau: f64,
    pub lambda: f64,
    pub grid: Vec<(usize, usize)>,
    pub mean_delta: Vec<f64>,
    /// Standard error of each `mean_delta` entry.
    pub std_error: Vec<f64>,
    pub bound: Vec<f64>,
    /// Least-squares slope of `ln mean_delta` against `ln m` over the grid
    /// points whose `n` equals the grid maximum; `None` with fewer than two
    /// distinct `m` there.
    pub slope_m: Option<f64>,
    pub trials: usize,
}

impl BiasExperimentReport {
    pub fn bound_holds(&self) -> bool {
        self.mean_delta.iter().zip(&self.bound).all(|(d, b)| d <= b)
    }
}

/// Averages `trials` draws of `δ` per grid point.
///
/// Trial `t` at grid point `g` uses its own generator derived from
/// `(seed, g, t)`, so results do not depend on evaluation order.
pub fn run_bias_experiment(
    space: &DiscreteLabelSpace,
    x_aff: &[f64],
    id_aff: &[f64],
    config: &BiasExperimentConfig,
) -> Result<BiasExperimentReport> {
    if config.trials < MIN_TRIALS {
        return Err(Error::InsufficientTrials {
            trials: config.trials,
            min: MIN_TRIALS,
        });
    }
    if config.grid.is_empty() || config.grid.iter().any(|&(m, n)| m == 0 || n == 0) {
        return Err(Error::InvalidGrid);
    }
    let mut mean_delta = Vec::with_capacity(config.grid.len());
    let mut std_error = Vec::with_capacity(config.grid.len());
    for (g, &(m, n)) in config.grid.iter().enumerate() {
        let (mut sum, mut sq) = (0.0, 0.0);
        for t in 0..config.trials {
            let mut rng = stream_rng(derive_seed(config.seed, g as u64, t as u64), STREAM_VERIFY);
            let d = sample_delta(space, x_aff, id_aff, m, n, config.lambda, &mut rng)?;
            sum += d;
            sq += d * d;
        }
        let k = config.trials as f64;
        let mean = sum / k;
        let var = ((sq - k * mean * mean) / (k - 1.0)).max(0.0);
        mean_delta.push(mean);
        std_error.push(libm::sqrt(var / k));
    }
    let bound = config
        .grid
        .iter()
        .map(|&(m, n)| bias_bound(config.kappa, space.tau(), m, n))
        .collect();
    let slope_m = fit_slope_m(&config.grid, &mean_delta);
    Ok(BiasExperimentReport {
        kappa: config.kappa,
        tau: space.tau(),
        lambda: config.lambda,
        grid: config.grid.clone(),
        mean_delta,
        std_error,
        bound,
        slope_m,
        trials: config.trials,
    })
}

fn fit_slope_m(grid: &[(usize, usize)], mean_delta: &[f64]) -> Option<f64> {
    let n_max = grid.iter().map(|&(_, n)| n).max()?;
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(mean_delta)
        .filter(|((_, n), d)| *n == n_max && **d > 0.0)
        .map(|(&(m, _), &d)| (libm::log(m as f64), libm::log(d)))
        .collect();
    least_squares_slope(&pts)
}

/// Ordinary least-squares slope; `None` if all x coincide.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
