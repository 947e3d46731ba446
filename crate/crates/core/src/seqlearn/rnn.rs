use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::SeqLearnError;
use crate::data::{dim, EventSequence, FlatParams, FlatReader, FormatError};
use crate::graphlearn::EpochRecord;
use crate::math::{bce, matvec, matvec_t_acc, outer_acc, sigmoid};
use crate::rng::stream_rng;

/// Recurrent model parameters.
///
/// Flat order: `w_x` (h x d), `w_a` (h x h), `b_a` (h), `w_y` (q x h),
/// `b_y` (q), `w_g` (d x h), `b_g` (d), all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub d: usize,
    pub q: usize,
    pub hidden: usize,
    /// Sigmoid outcome head with cross-entropy when true, linear with squared error otherwise.
    pub binary_y: bool,
    pub w_x: Vec<f64>,
    pub w_a: Vec<f64>,
    pub b_a: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: Vec<f64>,
    pub w_g: Vec<f64>,
    pub b_g: Vec<f64>,
}

/// Latent embedding after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnState {
    pub a: Vec<f64>,
}

fn uniform(rng: &mut impl Rng, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-s..s)).collect()
}

/// Glorot-uniform weights, zero biases. Draw order on stream 0 of `seed`:
/// `w_x`, `w_a`, `w_y`, `w_g`.
pub fn init_rnn(d: usize, q: usize, hidden: usize, binary_y: bool, seed: u64) -> RnnParams {
    let h = hidden;
    let mut rng = stream_rng(seed, 0);
    let w_x = uniform(&mut rng, h * d, d, h);
    let w_a = uniform(&mut rng, h * h, h, h);
    let w_y = uniform(&mut rng, q * h, h, q);
    let w_g = uniform(&mut rng, d * h, h, d);
    RnnParams { d, q, hidden: h, binary_y, w_x, w_a, b_a: vec![0.0; h], w_y, b_y: vec![0.0; q], w_g, b_g: vec![0.0; d] }
}

impl RnnParams {
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        z
    }

    pub fn slices(&self) -> [&[f64]; 7] {
        [&self.w_x, &self.w_a, &self.b_a, &self.w_y, &self.b_y, &self.w_g, &self.b_g]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 7] {
        [&mut self.w_x, &mut self.w_a, &mut self.b_a, &mut self.w_y, &mut self.b_y, &mut self.w_g, &mut self.b_g]
    }

    pub fn add_scaled(&mut self, other: &Self, alpha: f64) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[pos..pos + s.len()]);
            pos += s.len();
        }
    }

    /// One recurrence step: `a = tanh(W_x x + W_a a_prev + b_a)`.
    pub(crate) fn step(&self, x: &[f64], a_prev: &[f64], a: &mut [f64]) {
        let h = self.hidden;
        let mut rec = vec![0.0; h];
        matvec(&self.w_x, h, self.d, x, a);
        matvec(&self.w_a, h, h, a_prev, &mut rec);
        for r in 0..h {
            a[r] = (a[r] + rec[r] + self.b_a[r]).tanh();
        }
    }

    /// Outcome head pre-activations.
    pub(crate) fn outcome_logits(&self, a: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; self.q];
        matvec(&self.w_y, self.q, self.hidden, a, &mut o);
        o.iter_mut().zip(&self.b_y).for_each(|(v, b)| *v += b);
        o
    }

    pub(crate) fn outcome(&self, a: &[f64]) -> Vec<f64> {
        let mut o = self.outcome_logits(a);
        if self.binary_y {
            o.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        o
    }

    /// Next-event head pre-activations.
    pub(crate) fn event_logits(&self, a: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        matvec(&self.w_g, self.d, self.hidden, a, &mut g);
        g.iter_mut().zip(&self.b_g).for_each(|(v, b)| *v += b);
        g
    }

    pub(crate) fn check(&self, seq: &EventSequence) -> Result<(), SeqLearnError> {
        if seq.d != self.d || seq.q != self.q {
            return Err(SeqLearnError::Shape(format!(
                "sequence has (d, q) = ({}, {}), model expects ({}, {})",
                seq.d, seq.q, self.d, self.q
            )));
        }
        for (t, e) in seq.events.iter().enumerate() {
            if e.x.len() != self.d {
                return Err(SeqLearnError::Shape(format!("step {t}: x has length {}, expected {}", e.x.len(), self.d)));
            }
            if e.y.as_ref().is_some_and(|y| y.len() != self.q) {
                return Err(SeqLearnError::Shape(format!("step {t}: y length differs from q = {}", self.q)));
            }
        }
        Ok(())
    }
}

impl FlatParams for RnnParams {
    const MODEL_KIND: &'static str = "rnn";

    fn dims_json(&self) -> Value {
        json!({ "d": self.d, "q": self.q, "hidden": self.hidden, "binary_y": self.binary_y })
    }

    fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    fn from_flat(dims: &Value, flat: &[f64]) -> Result<Self, FormatError> {
        let (d, q, h) = (dim(dims, "d")?, dim(dims, "q")?, dim(dims, "hidden")?);
        let binary_y = dims
            .get("binary_y")
            .and_then(Value::as_bool)
            .ok_or_else(|| FormatError::Invalid("checkpoint dims missing boolean \"binary_y\"".into()))?;
        let mut r = FlatReader::new(flat);
        let params = RnnParams {
            d,
            q,
            hidden: h,
            binary_y,
            w_x: r.take(h * d)?,
            w_a: r.take(h * h)?,
            b_a: r.take(h)?,
            w_y: r.take(q * h)?,
            b_y: r.take(q)?,
            w_g: r.take(d * h)?,
            b_g: r.take(d)?,
        };
        r.finish()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnForward {
    /// Predicted outcome per step.
    pub y_hat: Vec<Vec<f64>>,
    /// Latent embedding per step.
    pub states: Vec<RnnState>,
}

fn run_states(params: &RnnParams, seq: &EventSequence) -> Vec<Vec<f64>> {
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(seq.len());
    let zero = vec![0.0; params.hidden];
    for e in &seq.events {
        let mut a = vec![0.0; params.hidden];
        params.step(&e.x, states.last().unwrap_or(&zero), &mut a);
        states.push(a);
    }
    states
}

/// Runs the recurrence over `seq`. Step `t` reads only `x_0..x_t`.
pub fn forward_rnn(params: &RnnParams, seq: &EventSequence) -> Result<RnnForward, SeqLearnError> {
    params.check(seq)?;
    let states = run_states(params, seq);
    Ok(RnnForward {
        y_hat: states.iter().map(|a| params.outcome(a)).collect(),
        states: states.into_iter().map(|a| RnnState { a }).collect(),
    })
}

/// Which labeled steps contribute to the outcome loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Supervision {
    /// Every step that carries an outcome.
    #[default]
    EveryStep,
    /// Only the final step, when it carries an outcome.
    FinalStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnTrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub supervision: Supervision,
    /// Weight of the next-event cross-entropy term; zero trains the outcome head only.
    pub next_event_weight: f64,
}

impl Default for RnnTrainConfig {
    fn default() -> Self {
        Self { lr: 0.05, epochs: 200, seed: 0, supervision: Supervision::EveryStep, next_event_weight: 1.0 }
    }
}

fn outcome_term(binary: bool, o: f64, y: f64) -> (f64, f64) {
    if binary {
        let p = sigmoid(o);
        let (l, dp) = bce(p, y);
        (l, dp * p * (1.0 - p))
    } else {
        ((o - y) * (o - y), 2.0 * (o - y))
    }
}

fn supervised(sup: Supervision, t: usize, len: usize) -> bool {
    sup == Supervision::EveryStep || t + 1 == len
}

/// Loss and exact gradients over a batch of sequences (full BPTT).
///
/// `loss = mean outcome loss + next_event_weight * mean next-event loss`.
/// The outcome mean runs over supervised `(step, column)` entries:
/// cross-entropy for binary outcomes (soft targets allowed), squared error
/// otherwise. The next-event mean runs over bits of `x_{t+1}` predicted from
/// `a_t`, for sequences with binary inputs only. A term with no entries is
/// left out.
pub fn rnn_loss_and_gradients(
    params: &RnnParams,
    seqs: &[EventSequence],
    supervision: Supervision,
    next_event_weight: f64,
) -> Result<(f64, RnnParams), SeqLearnError> {
    let (h, d, q) = (params.hidden, params.d, params.q);
    let mut n_out = 0usize;
    let mut n_next = 0usize;
    for s in seqs {
        params.check(s)?;
        n_out += s.events.iter().enumerate().filter(|(t, e)| e.y.is_some() && supervised(supervision, *t, s.len())).count() * q;
        if s.binary_x && next_event_weight != 0.0 {
            n_next += s.len().saturating_sub(1) * d;
        }
    }
    if n_out + n_next == 0 {
        return Err(SeqLearnError::Argument("batch has no supervised targets".into()));
    }
    let c_out = if n_out > 0 { 1.0 / n_out as f64 } else { 0.0 };
    let c_next = if n_next > 0 { next_event_weight / n_next as f64 } else { 0.0 };

    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let zero = vec![0.0; h];
    for s in seqs {
        let states = run_states(params, s);
        let len = s.len();
        let use_next = s.binary_x && c_next != 0.0;
        let mut carry = vec![0.0; h];
        for t in (0..len).rev() {
            let a = &states[t];
            let mut da = carry.clone();
            if let (Some(y), true) = (&s.events[t].y, supervised(supervision, t, len)) {
                let o = params.outcome_logits(a);
                let mut d_o = vec![0.0; q];
                for c in 0..q {
                    let (l, g) = outcome_term(params.binary_y, o[c], y[c]);
                    loss += c_out * l;
                    d_o[c] = c_out * g;
                }
                matvec_t_acc(&params.w_y, q, h, &d_o, &mut da);
                outer_acc(&mut grads.w_y, &d_o, a);
                grads.b_y.iter_mut().zip(&d_o).for_each(|(g, v)| *g += v);
            }
            if use_next && t + 1 < len {
                let g = params.event_logits(a);
                let target = &s.events[t + 1].x;
                let mut d_g = vec![0.0; d];
                for u in 0..d {
                    let p = sigmoid(g[u]);
                    let (l, dp) = bce(p, target[u]);
                    loss += c_next * l;
                    d_g[u] = c_next * dp * p * (1.0 - p);
                }
                matvec_t_acc(&params.w_g, d, h, &d_g, &mut da);
                outer_acc(&mut grads.w_g, &d_g, a);
                grads.b_g.iter_mut().zip(&d_g).for_each(|(g, v)| *g += v);
            }
            let dz: Vec<f64> = da.iter().zip(a).map(|(g, v)| g * (1.0 - v * v)).collect();
            let a_prev = if t > 0 { &states[t - 1] } else { &zero };
            outer_acc(&mut grads.w_x, &dz, &s.events[t].x);
            outer_acc(&mut grads.w_a, &dz, a_prev);
            grads.b_a.iter_mut().zip(&dz).for_each(|(g, v)| *g += v);
            carry.fill(0.0);
            matvec_t_acc(&params.w_a, h, h, &dz, &mut carry);
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RnnMetrics {
    /// Mean outcome loss over every labeled step.
    pub outcome_loss: Option<f64>,
    /// Mean squared error of predicted outcomes over every labeled step.
    pub mse: Option<f64>,
    /// Mean next-event cross-entropy, for sequences with binary inputs.
    pub next_event_loss: Option<f64>,
}

pub fn evaluate_rnn(params: &RnnParams, seqs: &[EventSequence]) -> Result<RnnMetrics, SeqLearnError> {
    let (mut loss, mut sq, mut n) = (0.0, 0.0, 0usize);
    let (mut next, mut n_next) = (0.0, 0usize);
    for s in seqs {
        params.check(s)?;
        let states = run_states(params, s);
        for (t, a) in states.iter().enumerate() {
            if let Some(y) = &s.events[t].y {
                let o = params.outcome_logits(a);
                for c in 0..params.q {
                    loss += outcome_term(params.binary_y, o[c], y[c]).0;
                    let pred = if params.binary_y { sigmoid(o[c]) } else { o[c] };
                    sq += (pred - y[c]) * (pred - y[c]);
                    n += 1;
                }
            }
            if s.binary_x && t + 1 < s.len() {
                let g = params.event_logits(a);
                for (gu, xu) in g.iter().zip(&s.events[t + 1].x) {
                    next += bce(sigmoid(*gu), *xu).0;
                    n_next += 1;
                }
            }
        }
    }
    let mean = |v: f64, k: usize| (k > 0).then(|| v / k as f64);
    Ok(RnnMetrics { outcome_loss: mean(loss, n), mse: mean(sq, n), next_event_loss: mean(next, n_next) })
}

/// Full-batch gradient descent with full backpropagation through time. The
/// validation metric is outcome MSE. Training draws no randomness, so runs
/// are identical for identical inputs; `cfg.seed` is kept for provenance.
pub fn train_rnn(
    params: &RnnParams,
    train: &[EventSequence],
    val: &[EventSequence],
    cfg: &RnnTrainConfig,
) -> Result<(RnnParams, Vec<EpochRecord>), SeqLearnError> {
    if train.is_empty() {
        return Err(SeqLearnError::Argument("training set is empty".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(SeqLearnError::Argument(format!("learning rate {} must be non-negative", cfg.lr)));
    }
    let mut current = params.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, grads) = rnn_loss_and_gradients(&current, train, cfg.supervision, cfg.next_event_weight)?;
        if !loss.is_finite() {
            return Err(SeqLearnError::Numeric { epoch });
        }
        let val_metric = if val.is_empty() { None } else { evaluate_rnn(&current, val)?.mse };
        history.push(EpochRecord { epoch, loss, val_metric });
        current.add_scaled(&grads, -cfg.lr);
        if !current.is_finite() {
            return Err(SeqLearnError::Numeric { epoch });
        }
    }
    Ok((current, history))
}
