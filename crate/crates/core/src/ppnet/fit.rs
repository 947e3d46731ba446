use serde::{Deserialize, Serialize};

use super::likelihood::{accumulate, log_likelihood_and_gradient};
use super::PpnetError;
use crate::data::MarkedPointProcess;
use crate::synthgen::HawkesParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HawkesFitConfig {
    /// Fixed kernel decay.
    pub beta: f64,
    /// L1 penalty on `W`.
    pub lambda_reg: f64,
    /// Largest step tried at each iteration.
    pub step: f64,
    pub max_iter: usize,
    /// Stop when the relative objective change falls below this.
    pub tol: f64,
    pub mu_min: f64,
    /// Recorded for provenance; the initialization itself draws no randomness.
    pub seed: u64,
}

impl Default for HawkesFitConfig {
    fn default() -> Self {
        Self { beta: 1.0, lambda_reg: 0.0, step: 0.1, max_iter: 5000, tol: 1e-8, mu_min: 1e-6, seed: 0 }
    }
}

impl HawkesFitConfig {
    pub fn validate(&self) -> Result<(), PpnetError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.beta) || !positive(self.step) || !positive(self.mu_min) {
            return Err(PpnetError::Config("beta, step and mu_min must be positive".into()));
        }
        if !(self.lambda_reg.is_finite() && self.lambda_reg >= 0.0) || !(self.tol >= 0.0) {
            return Err(PpnetError::Config("lambda_reg and tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesFit {
    pub params: HawkesParams,
    /// Penalized objective `LL - lambda_reg * sum W` of the initial point and
    /// of every accepted iterate.
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_HALVINGS: usize = 30;

fn penalized(params: &HawkesParams, data: &MarkedPointProcess, lambda_reg: f64) -> Option<f64> {
    let ll = accumulate(params, data, None).ok()?;
    let obj = ll - lambda_reg * params.w.iter().sum::<f64>();
    obj.is_finite().then_some(obj)
}

/// Projected proximal gradient ascent on `LL - lambda_reg * sum W`.
///
/// Start: `mu_u = max(count_u / T, mu_min)`, `W = 0.01` everywhere. Each
/// iteration takes `mu <- max(mu + s g_mu, mu_min)` and
/// `W <- max(W + s (g_W - lambda_reg), 0)` (the non-negative soft threshold).
/// A candidate that lowers the objective is retried with `s` halved, up to
/// 30 times; if none is accepted the fit stops. The next iteration starts
/// from twice the accepted step, capped at `cfg.step`. The fit stops when
/// the relative objective change drops below `cfg.tol` or after
/// `cfg.max_iter` iterations.
pub fn fit_hawkes(data: &MarkedPointProcess, n: usize, cfg: &HawkesFitConfig) -> Result<HawkesFit, PpnetError> {
    cfg.validate()?;
    if data.n != n || n == 0 {
        return Err(PpnetError::Data(format!("data has n = {}, fit requested n = {n}", data.n)));
    }
    if let Some(v) = data.violations().into_iter().next() {
        return Err(PpnetError::Data(v));
    }
    let horizon = data.horizon;
    let mu = data.counts().iter().map(|&c| (c as f64 / horizon).max(cfg.mu_min)).collect();
    let mut params = HawkesParams::new(mu, vec![0.01; n * n], cfg.beta);
    let mut objective =
        penalized(&params, data, cfg.lambda_reg).ok_or(PpnetError::Numeric { iteration: 0 })?;
    let mut trajectory = vec![objective];
    let mut step = cfg.step;
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 0..cfg.max_iter {
        iterations = iteration + 1;
        let (_, grad) = log_likelihood_and_gradient(&params, data)?;
        if grad.mu.iter().chain(&grad.w).any(|g| !g.is_finite()) {
            return Err(PpnetError::Numeric { iteration });
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = params.clone();
            for (m, g) in cand.mu.iter_mut().zip(&grad.mu) {
                *m = (*m + step * g).max(cfg.mu_min);
            }
            for (w, g) in cand.w.iter_mut().zip(&grad.w) {
                *w = (*w + step * (g - cfg.lambda_reg)).max(0.0);
            }
            match penalized(&cand, data, cfg.lambda_reg) {
                Some(obj) if obj >= objective => {
                    accepted = Some((cand, obj));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((cand, obj)) = accepted else {
            converged = true;
            break;
        };
        let change = (obj - objective).abs() / objective.abs().max(1.0);
        params = cand;
        objective = obj;
        trajectory.push(obj);
        step = (step * 2.0).min(cfg.step);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(HawkesFit { params, trajectory, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{simulate_hawkes, SimulateOptions};

    #[test]
    fn poisson_data_recovers_rate_and_no_excitation() {
        let truth = HawkesParams::new(vec![0.5], vec![0.0], 1.0);
        let data = simulate_hawkes(&truth, 1000.0, 4, SimulateOptions::default()).unwrap();
        let fit = fit_hawkes(&data, 1, &HawkesFitConfig::default()).unwrap();
        assert!((fit.params.mu[0] - 0.5).abs() < 0.05, "{:?}", fit.params);
        assert!(fit.params.w[0] < 0.05, "{:?}", fit.params);
    }

    #[test]
    fn heavy_penalty_zeroes_every_weight() {
        let truth = HawkesParams::new(vec![0.3, 0.3], vec![0.0, 0.5, 0.0, 0.0], 1.0);
        let data = simulate_hawkes(&truth, 200.0, 1, SimulateOptions::default()).unwrap();
        let cfg = HawkesFitConfig { lambda_reg: 1e6, ..Default::default() };
        let fit = fit_hawkes(&data, 2, &cfg).unwrap();
        assert!(fit.params.w.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn iterates_stay_feasible_and_ascend() {
        let truth = HawkesParams::new(vec![0.2, 0.1, 0.3], vec![0.0, 0.4, 0.0, 0.0, 0.0, 0.3, 0.2, 0.0, 0.0], 1.0);
        let data = simulate_hawkes(&truth, 300.0, 2, SimulateOptions::default()).unwrap();
        let cfg = HawkesFitConfig { lambda_reg: 0.5, max_iter: 300, ..Default::default() };
        let fit = fit_hawkes(&data, 3, &cfg).unwrap();
        assert!(fit.trajectory.windows(2).all(|w| w[1] >= w[0]));
        assert!(fit.params.w.iter().all(|w| *w >= 0.0));
        assert!(fit.params.mu.iter().all(|m| *m >= cfg.mu_min));
        assert_eq!(fit, fit_hawkes(&data, 3, &cfg).unwrap());
    }

    #[test]
    fn silent_node_sits_at_the_floor() {
        let data = MarkedPointProcess { horizon: 10.0, n: 2, events: vec![(1.0, 0), (4.0, 0), (7.5, 0)] };
        let fit = fit_hawkes(&data, 2, &HawkesFitConfig::default()).unwrap();
        assert_eq!(fit.params.mu[1], 1e-6);
    }

    #[test]
    fn bad_config_is_rejected() {
        let data = MarkedPointProcess { horizon: 1.0, n: 1, events: vec![] };
        let cfg = HawkesFitConfig { beta: 0.0, ..Default::default() };
        assert!(matches!(fit_hawkes(&data, 1, &cfg), Err(PpnetError::Config(_))));
        assert!(matches!(fit_hawkes(&data, 2, &HawkesFitConfig::default()), Err(PpnetError::Data(_))));
    }
}
