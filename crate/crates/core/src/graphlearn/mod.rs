//! Edge-gated message passing over attributed directed graphs.
//!
//! Layer update for node `i`:
//! `h_i' = tanh(W_self h_i + sum_{j -> i} g_ji W_nbr h_j / max(1, indeg i) + b)`
//! with gate `g_ji = sigmoid(u . a_ji + c)`. Heads: graph labels from the mean
//! of final embeddings, a per-node probability, and a bilinear directed link
//! score. Gradients are hand-derived and checked against finite differences.

mod explain;
mod forward;
mod model;
mod train;

use thiserror::Error;

pub use explain::{extract_substructure, permutation_importance, FeatureImportance, Substructure};
pub use forward::{forward_graph, score_link, GraphForward};
pub use model::{init_model, param_count, GraphModelParams, LayerParams};
pub use train::{
    evaluate, evaluate_pairs, holdout_edges, loss_and_gradients, sample_link_pairs, train, Batch, EpochRecord,
    LinkPair, LinkSplit, Metrics, Task, TrainConfig,
};

#[derive(Debug, Error)]
pub enum GraphLearnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("task error: {0}")]
    Task(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("training diverged at epoch {epoch}")]
    Numeric { epoch: usize },
}

/// Training history as CSV with columns `epoch,loss,val_metric`.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss", "val_metric"]).expect("in-memory write");
    for r in history {
        let val = r.val_metric.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.epoch.to_string(), r.loss.to_string(), val])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
