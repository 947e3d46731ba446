use super::PpnetError;
use crate::data::MarkedPointProcess;
use crate::synthgen::HawkesParams;

fn check(params: &HawkesParams, data: &MarkedPointProcess) -> Result<(), PpnetError> {
    params.validate().map_err(|e| PpnetError::Config(e.to_string()))?;
    if params.n() != data.n {
        return Err(PpnetError::Data(format!("data has n = {}, params have n = {}", data.n, params.n())));
    }
    if let Some(v) = data.violations().into_iter().next() {
        return Err(PpnetError::Data(v));
    }
    Ok(())
}

/// Log-likelihood on `(0, T]`:
/// `sum_i log lambda_{u_i}(t_i) - sum_u [mu_u T + sum_i W[v_i, u] (1 - exp(-beta (T - t_i)))]`.
///
/// Runs in `O(events * n)` with the recursive accumulator
/// `R_v(t) = sum_{t_j < t, v_j = v} beta exp(-beta (t - t_j))`, decayed between
/// events, so that `lambda_u(t) = mu_u + sum_v W[v, u] R_v(t)`.
pub fn log_likelihood(params: &HawkesParams, data: &MarkedPointProcess) -> Result<f64, PpnetError> {
    check(params, data)?;
    Ok(accumulate(params, data, None)?)
}

/// Gradient of the log-likelihood, `mu` first then `W` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodGradient {
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
}

/// Log-likelihood and its exact gradient:
/// `dLL/dmu_u = sum_{i: u_i = u} 1 / lambda_i - T` and
/// `dLL/dW[v, u] = sum_{i: u_i = u} R_v(t_i) / lambda_i - sum_{j: v_j = v} (1 - exp(-beta (T - t_j)))`.
pub fn log_likelihood_and_gradient(
    params: &HawkesParams,
    data: &MarkedPointProcess,
) -> Result<(f64, LikelihoodGradient), PpnetError> {
    check(params, data)?;
    let n = params.n();
    let mut grad = LikelihoodGradient { mu: vec![0.0; n], w: vec![0.0; n * n] };
    let ll = accumulate(params, data, Some(&mut grad))?;
    Ok((ll, grad))
}

pub(crate) fn accumulate(
    params: &HawkesParams,
    data: &MarkedPointProcess,
    mut grad: Option<&mut LikelihoodGradient>,
) -> Result<f64, PpnetError> {
    let n = params.n();
    let (beta, horizon) = (params.beta, data.horizon);
    let mut r = vec![0.0; n];
    let mut last = 0.0;
    let mut log_sum = 0.0;
    let mut tail = vec![0.0; n];
    for (k, &(t, u)) in data.events.iter().enumerate() {
        let decay = (-beta * (t - last)).exp();
        r.iter_mut().for_each(|x| *x *= decay);
        last = t;
        let lambda = params.mu[u] + (0..n).map(|v| params.w[v * n + u] * r[v]).sum::<f64>();
        if !(lambda > 0.0) {
            return Err(PpnetError::NonPositiveIntensity { event: k, value: lambda });
        }
        log_sum += lambda.ln();
        if let Some(g) = grad.as_deref_mut() {
            let inv = 1.0 / lambda;
            g.mu[u] += inv;
            for v in 0..n {
                g.w[v * n + u] += r[v] * inv;
            }
        }
        r[u] += beta;
        tail[u] += 1.0 - (-beta * (horizon - t)).exp();
    }
    let mut compensator = 0.0;
    for u in 0..n {
        compensator += params.mu[u] * horizon;
        for v in 0..n {
            compensator += params.w[v * n + u] * tail[v];
        }
    }
    if let Some(g) = grad {
        for u in 0..n {
            g.mu[u] -= horizon;
            for v in 0..n {
                g.w[v * n + u] -= tail[v];
            }
        }
    }
    Ok(log_sum - compensator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::synthgen::{simulate_hawkes, SimulateOptions};
    use rand::Rng;

    #[test]
    fn no_events_is_minus_base_mass() {
        let p = HawkesParams::new(vec![0.5], vec![0.0], 1.0);
        let data = MarkedPointProcess { horizon: 2.0, n: 1, events: vec![] };
        assert_eq!(log_likelihood(&p, &data).unwrap(), -1.0);
    }

    #[test]
    fn single_event_without_excitation() {
        let p = HawkesParams::new(vec![0.5], vec![0.0], 1.0);
        let data = MarkedPointProcess { horizon: 2.0, n: 1, events: vec![(1.0, 0)] };
        let ll = log_likelihood(&p, &data).unwrap();
        assert!((ll - (0.5f64.ln() - 1.0)).abs() < 1e-15);
        assert!((ll + 1.693_147_2).abs() < 1e-7);
    }

    /// Brute-force intensity and trapezoid integration with step `h`.
    fn numeric_ll(p: &HawkesParams, d: &MarkedPointProcess, h: f64) -> f64 {
        let n = p.n();
        let lam = |u: usize, t: f64| {
            p.mu[u]
                + d.events
                    .iter()
                    .filter(|&&(ti, _)| ti < t)
                    .map(|&(ti, v)| p.weight(v, u) * p.beta * (-p.beta * (t - ti)).exp())
                    .sum::<f64>()
        };
        let log_part: f64 = d.events.iter().map(|&(t, u)| lam(u, t).ln()).sum();
        let steps = (d.horizon / h).round() as usize;
        let total = |t: f64| (0..n).map(|u| lam(u, t)).sum::<f64>();
        let mut integral = 0.0;
        for s in 0..steps {
            let (a, b) = (s as f64 * h, (s + 1) as f64 * h);
            integral += 0.5 * h * (total(a) + total(b));
        }
        log_part - integral
    }

    #[test]
    fn closed_form_matches_numeric_integration() {
        for seed in 0..4 {
            let mut rng = stream_rng(seed, 9);
            let n = 3;
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.6)).collect();
            let w: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..0.3)).collect();
            let p = HawkesParams::new(mu, w, rng.random_range(0.5..2.0));
            let data = simulate_hawkes(&p, 12.0, seed, SimulateOptions::default()).unwrap();
            let exact = log_likelihood(&p, &data).unwrap();
            let numeric = numeric_ll(&p, &data, 1e-3);
            assert!((exact - numeric).abs() / exact.abs() < 1e-3, "{exact} vs {numeric}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = stream_rng(seed, 3);
            let n = 2;
            let p = HawkesParams::new(
                (0..n).map(|_| rng.random_range(0.3..1.0)).collect(),
                (0..n * n).map(|_| rng.random_range(0.05..0.4)).collect(),
                1.3,
            );
            let data = simulate_hawkes(&p, 20.0, seed, SimulateOptions::default()).unwrap();
            let (_, g) = log_likelihood_and_gradient(&p, &data).unwrap();
            let h = 1e-5;
            let analytic: Vec<f64> = g.mu.iter().chain(&g.w).copied().collect();
            for k in 0..analytic.len() {
                let mut up = p.clone();
                let mut down = p.clone();
                let (a, b) = if k < n { (&mut up.mu[k], &mut down.mu[k]) } else { (&mut up.w[k - n], &mut down.w[k - n]) };
                *a += h;
                *b -= h;
                let numeric = (log_likelihood(&up, &data).unwrap() - log_likelihood(&down, &data).unwrap()) / (2.0 * h);
                let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
                assert!(rel < 1e-4, "seed {seed} coordinate {k}: {} vs {numeric}", analytic[k]);
            }
        }
    }

    #[test]
    fn mismatched_node_count_is_rejected() {
        let p = HawkesParams::new(vec![0.5, 0.5], vec![0.0; 4], 1.0);
        let data = MarkedPointProcess { horizon: 1.0, n: 1, events: vec![] };
        assert!(matches!(log_likelihood(&p, &data), Err(PpnetError::Data(_))));
    }
}
