//! Sequence models over event streams: a pooled autoregressive baseline and a
//! causal recurrent network with an outcome head and a next-event head.
//!
//! Recurrence: `a_t = tanh(W_x x_t + W_a a_{t-1} + b_a)` with `a_{-1} = 0`,
//! outcome `y_t = sigmoid(w_y a_t + b_y)` (or linear for real outcomes), and
//! next-event bit probabilities `sigmoid(W_g a_t + b_g)`.

mod ar;
mod generate;
mod rnn;

use thiserror::Error;

pub use ar::{fit_ar, ArParams, PIVOT_TOLERANCE};
pub use generate::{generate_events, Sampling};
pub use rnn::{
    evaluate_rnn, forward_rnn, init_rnn, rnn_loss_and_gradients, train_rnn, RnnForward, RnnMetrics, RnnParams,
    RnnState, RnnTrainConfig, Supervision,
};

#[derive(Debug, Error)]
pub enum SeqLearnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("rank deficient: {0}")]
    Rank(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("training diverged at epoch {epoch}")]
    Numeric { epoch: usize },
}
