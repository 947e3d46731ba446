use rand::Rng;

use super::rnn::RnnParams;
use super::SeqLearnError;
use crate::data::{Event, EventSequence};
use crate::math::sigmoid;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Bit `u` is 1 when a uniform draw from stream 0 of `seed` falls below its
    /// probability. Draws run step by step, bit by bit.
    Sampled { seed: u64 },
    /// Bit `u` is 1 when its probability exceeds 0.5.
    Greedy,
}

/// Extends `prefix` by `horizon` generated events.
///
/// Each new step draws `x_hat` from `sigmoid(W_g a + b_g)` using the latest
/// state (the zero state for an empty prefix), advances the recurrence on
/// `x_hat`, and records the predicted outcome. Generated events sit one time
/// unit apart after the last prefix timestamp and carry `generated = true`.
pub fn generate_events(
    params: &RnnParams,
    prefix: &EventSequence,
    horizon: usize,
    sampling: Sampling,
) -> Result<EventSequence, SeqLearnError> {
    if horizon == 0 {
        return Err(SeqLearnError::Argument("horizon must be at least 1".into()));
    }
    params.check(prefix)?;
    let mut a = vec![0.0; params.hidden];
    let mut next = vec![0.0; params.hidden];
    for e in &prefix.events {
        params.step(&e.x, &a, &mut next);
        std::mem::swap(&mut a, &mut next);
    }
    let mut rng = match sampling {
        Sampling::Sampled { seed } => Some(stream_rng(seed, 0)),
        Sampling::Greedy => None,
    };
    let mut out = prefix.clone();
    let mut t = prefix.events.last().map_or(0.0, |e| e.t + 1.0);
    for _ in 0..horizon {
        let x: Vec<f64> = params
            .event_logits(&a)
            .into_iter()
            .map(|g| {
                let p = sigmoid(g);
                let on = match rng.as_mut() {
                    Some(r) => r.random::<f64>() < p,
                    None => p > 0.5,
                };
                if on { 1.0 } else { 0.0 }
            })
            .collect();
        params.step(&x, &a, &mut next);
        std::mem::swap(&mut a, &mut next);
        out.events.push(Event { t, x, y: Some(params.outcome(&a)), generated: true });
        t += 1.0;
    }
    Ok(out)
}
