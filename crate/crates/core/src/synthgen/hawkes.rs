use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::SynthError;
use crate::data::{dim, FlatParams, FlatReader, FormatError, MarkedPointProcess};
use crate::rng::stream_rng;

/// Multivariate Hawkes process with exponential kernel:
/// `lambda_u(t) = mu_u + sum_{t_i < t} W[v_i, u] * beta * exp(-beta (t - t_i))`.
///
/// `w` is row-major `n x n`; row `v` holds the influence of node `v` on every
/// target. The kernel integrates to one, so row sums are expected offspring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    pub mu: Vec<f64>,
    pub w: Vec<f64>,
    pub beta: f64,
}

impl HawkesParams {
    pub fn new(mu: Vec<f64>, w: Vec<f64>, beta: f64) -> Self {
        Self { mu, w, beta }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.w[from * self.n() + to]
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.n();
        if n == 0 {
            return Err(SynthError::Config("Hawkes process needs at least one node".into()));
        }
        if self.w.len() != n * n {
            return Err(SynthError::Config(format!("W has {} entries, expected {}", self.w.len(), n * n)));
        }
        if self.mu.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return Err(SynthError::Config("every base rate mu must be positive and finite".into()));
        }
        if self.w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(SynthError::Config("W must be non-negative and finite".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(SynthError::Config(format!("beta {} must be positive", self.beta)));
        }
        Ok(())
    }

    /// Largest expected number of direct offspring of a single event.
    pub fn max_row_sum(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|v| self.w[v * n..(v + 1) * n].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// True when the row-sum bound cannot certify a stationary process.
    pub fn is_supercritical(&self) -> bool {
        self.max_row_sum() >= 1.0
    }
}

impl FlatParams for HawkesParams {
    const MODEL_KIND: &'static str = "hawkes";

    fn dims_json(&self) -> Value {
        json!({ "n": self.n() })
    }

    /// Order: `mu` (n), `W` row-major (n * n), `beta`.
    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * (self.n() + 1) + 1);
        out.extend_from_slice(&self.mu);
        out.extend_from_slice(&self.w);
        out.push(self.beta);
        out
    }

    fn from_flat(dims: &Value, flat: &[f64]) -> Result<Self, FormatError> {
        let n = dim(dims, "n")?;
        let mut r = FlatReader::new(flat);
        let mu = r.take(n)?;
        let w = r.take(n * n)?;
        let beta = r.scalar()?;
        r.finish()?;
        Ok(Self { mu, w, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateOptions {
    /// Simulate even when the stability bound fails.
    pub force: bool,
    /// Abort once this many events have been emitted.
    pub max_events: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            force: false,
            max_events: 5_000_000,
        }
    }
}

/// Exact simulation by Ogata thinning on stream 0 of `seed`.
///
/// Between events the total intensity only decays, so its value just after
/// the last accepted or rejected candidate bounds it until the next one.
/// Each round draws an exponential waiting time at that bound, then one
/// uniform for acceptance and, on acceptance, one uniform to pick the node.
pub fn simulate_hawkes(
    params: &HawkesParams,
    horizon: f64,
    seed: u64,
    opts: SimulateOptions,
) -> Result<MarkedPointProcess, SynthError> {
    params.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SynthError::Config(format!("horizon {horizon} must be positive")));
    }
    if params.is_supercritical() && !opts.force {
        return Err(SynthError::Supercritical {
            max_row_sum: params.max_row_sum(),
        });
    }
    let n = params.n();
    let beta = params.beta;
    let mut rng = stream_rng(seed, 0);
    // excitation[u] = sum over past events of W[v_i, u] * beta * exp(-beta (t - t_i))
    let mut excitation = vec![0.0; n];
    let mut events = Vec::new();
    let mut t = 0.0;
    let total = |exc: &[f64]| -> f64 { params.mu.iter().zip(exc).map(|(m, e)| m + e).sum() };

    loop {
        let bound = total(&excitation);
        let wait: f64 = rng.sample::<f64, _>(Exp1) / bound;
        let candidate = t + wait;
        if !(candidate <= horizon) {
            break;
        }
        let decay = (-beta * (candidate - t)).exp();
        excitation.iter_mut().for_each(|e| *e *= decay);
        t = candidate;
        let lambda = total(&excitation);
        if rng.random::<f64>() * bound > lambda {
            continue;
        }
        let target = rng.random::<f64>() * lambda;
        let mut acc = 0.0;
        let mut node = n - 1;
        for u in 0..n {
            acc += params.mu[u] + excitation[u];
            if target < acc {
                node = u;
                break;
            }
        }
        if events.last().is_some_and(|&(prev, _)| t <= prev) {
            // a zero-length wait can only happen at extreme rates; skip to keep
            // timestamps strictly increasing
            continue;
        }
        events.push((t, node));
        if events.len() >= opts.max_events {
            return Err(SynthError::Exploded { events: events.len(), time: t });
        }
        for (u, e) in excitation.iter_mut().enumerate() {
            *e += params.weight(node, u) * beta;
        }
    }
    Ok(MarkedPointProcess { horizon, n, events })
}
