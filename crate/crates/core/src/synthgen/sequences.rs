use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::data::{Event, EventSequence, SequenceSet};
use crate::math::{dot, sigmoid};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeqGenConfig {
    /// Number of actors.
    pub d: usize,
    /// Steps per sequence.
    pub steps: usize,
    /// Probability that an actor keeps its previous presence bit.
    pub stay_prob: f64,
    /// Presence probability at the first step and on every redraw.
    pub init_prob: f64,
    /// Decay of the hidden outcome state.
    pub decay: f64,
    /// Replaces the per-sequence actor weights when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_override: Option<Vec<f64>>,
}

impl Default for SeqGenConfig {
    fn default() -> Self {
        Self {
            d: 5,
            steps: 50,
            stay_prob: 0.8,
            init_prob: 0.3,
            decay: 0.9,
            weights_override: None,
        }
    }
}

impl SeqGenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !prob(self.stay_prob) || !prob(self.init_prob) {
            return Err(SynthError::Config("stay_prob and init_prob must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(SynthError::Config(format!("decay {} must lie in [0, 1)", self.decay)));
        }
        if let Some(w) = &self.weights_override {
            if w.len() != self.d || w.iter().any(|v| !v.is_finite()) {
                return Err(SynthError::Config(format!(
                    "weights_override needs {} finite entries",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTruth {
    pub w: Vec<f64>,
    /// Hidden state trajectory, one entry per step.
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqGenTruth {
    pub seed: u64,
    pub decay: f64,
    pub sequences: Vec<SequenceTruth>,
}

impl SeqGenTruth {
    pub fn from_set(set: &SequenceSet) -> Option<Self> {
        serde_json::from_value(set.ground_truth.clone()?).ok()
    }
}

/// Hidden state recursion: `s_0 = 0`, `s_t = decay * s_{t-1} + w . x_t` for `t >= 1`.
pub fn hidden_trajectory(decay: f64, w: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let mut s = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        let st = if t == 0 { 0.0 } else { decay * s[t - 1] + dot(w, x) };
        s.push(st);
    }
    s
}

/// Generates `count` actor-presence sequences with outcome `y_t = sigmoid(s_t)`.
///
/// Each sequence `i` uses stream `i`. Draw order: weights `w ~ U[-1,1)^d`
/// (skipped when overridden); the first step's presence bits; then per later
/// step and actor a stay uniform and, on a redraw, a presence uniform.
pub fn gen_sequences(cfg: &SeqGenConfig, count: usize, seed: u64) -> Result<SequenceSet, SynthError> {
    cfg.validate()?;
    let mut sequences = Vec::with_capacity(count);
    let mut truths = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = stream_rng(seed, i as u64);
        let w: Vec<f64> = match &cfg.weights_override {
            Some(w) => w.clone(),
            None => (0..cfg.d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(cfg.steps);
        for t in 0..cfg.steps {
            let x: Vec<f64> = (0..cfg.d)
                .map(|u| {
                    let redraw = t == 0 || rng.random::<f64>() >= cfg.stay_prob;
                    if redraw {
                        if rng.random::<f64>() < cfg.init_prob { 1.0 } else { 0.0 }
                    } else {
                        xs[t - 1][u]
                    }
                })
                .collect();
            xs.push(x);
        }
        let s = hidden_trajectory(cfg.decay, &w, &xs);
        let mut seq = EventSequence::new(cfg.d, 1, true);
        seq.events = xs
            .into_iter()
            .zip(&s)
            .enumerate()
            .map(|(t, (x, &st))| Event::new(t as f64, x, Some(vec![sigmoid(st)])))
            .collect();
        sequences.push(seq);
        truths.push(SequenceTruth { w, s });
    }
    let truth = SeqGenTruth {
        seed,
        decay: cfg.decay,
        sequences: truths,
    };
    Ok(SequenceSet {
        sequences,
        ground_truth: Some(serde_json::to_value(&truth).expect("sidecar serializes")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_half() {
        let cfg = SeqGenConfig { weights_override: Some(vec![0.0; 5]), ..Default::default() };
        let set = gen_sequences(&cfg, 3, 4).unwrap();
        for e in set.sequences.iter().flat_map(|s| &s.events) {
            assert_eq!(e.y.as_ref().unwrap()[0], 0.5);
        }
    }

    #[test]
    fn absorbing_empty_state() {
        let cfg = SeqGenConfig { stay_prob: 1.0, init_prob: 0.0, ..Default::default() };
        let set = gen_sequences(&cfg, 4, 8).unwrap();
        for e in set.sequences.iter().flat_map(|s| &s.events) {
            assert!(e.x.iter().all(|&b| b == 0.0));
            assert_eq!(e.y.as_ref().unwrap()[0], 0.5);
        }
    }

    #[test]
    fn outcomes_resimulate_from_sidecar() {
        let set = gen_sequences(&SeqGenConfig::default(), 6, 11).unwrap();
        let truth = SeqGenTruth::from_set(&set).unwrap();
        for (seq, t) in set.sequences.iter().zip(&truth.sequences) {
            assert!(seq.violations().is_empty());
            let xs: Vec<Vec<f64>> = seq.events.iter().map(|e| e.x.clone()).collect();
            let s = hidden_trajectory(truth.decay, &t.w, &xs);
            assert_eq!(s, t.s);
            for (e, st) in seq.events.iter().zip(&s) {
                assert_eq!(e.y.as_ref().unwrap()[0], sigmoid(*st));
            }
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        for cfg in [
            SeqGenConfig { decay: 1.0, ..Default::default() },
            SeqGenConfig { stay_prob: -0.1, ..Default::default() },
            SeqGenConfig { weights_override: Some(vec![0.0; 2]), ..Default::default() },
        ] {
            assert!(gen_sequences(&cfg, 1, 0).is_err());
        }
    }
}
