use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forward::{backward_view, check_params, forward_view, graph_outputs, link_logit, GraphView, HeadGrads};
use super::model::GraphModelParams;
use super::GraphLearnError;
use crate::data::{GraphDataset, LabelKind, PoliticalGraph};
use crate::math::{bce, sigmoid};
use crate::metrics;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    GraphLabel,
    NodeLabel,
    Link,
}

/// One scored ordered node pair, by node position within `graphs[graph]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkPair {
    pub graph: usize,
    pub src: usize,
    pub dst: usize,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub task: Task,
    /// Sampled absent pairs per present edge for the link task.
    pub negative_ratio: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            epochs: 200,
            seed: 0,
            task: Task::GraphLabel,
            negative_ratio: 1.0,
        }
    }
}

/// Graphs plus, for the link task, the pairs to score.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub graphs: &'a [PoliticalGraph],
    pub task: Task,
    pub pairs: &'a [LinkPair],
}

pub(crate) struct Prepared<'a> {
    pub graphs: &'a [PoliticalGraph],
    pub views: Vec<GraphView>,
}

impl<'a> Prepared<'a> {
    pub fn new(params: &GraphModelParams, graphs: &'a [PoliticalGraph]) -> Result<Self, GraphLearnError> {
        let views = graphs
            .iter()
            .map(|g| GraphView::new(g, params.m, params.p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { graphs, views })
    }
}

/// Uniform sample of `count` absent ordered pairs of `g` (without replacement;
/// all of them when fewer exist), drawn with a partial Fisher-Yates shuffle.
fn sample_absent(g: &PoliticalGraph, view: &GraphView, count: usize, rng: &mut impl rand::Rng) -> Vec<(usize, usize)> {
    let n = view.n;
    let mut present = vec![false; n * n];
    for (&s, &d) in view.src.iter().zip(&view.dst) {
        present[s * n + d] = true;
    }
    let _ = g;
    let mut absent: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !present[i * n + j])
        .collect();
    let take = count.min(absent.len());
    let (chosen, _) = absent.partial_shuffle(rng, take);
    chosen.to_vec()
}

/// Positives are every edge of every graph (edge order); negatives are
/// `round(ratio * |E|)` absent ordered pairs per graph, graph `k` drawing on
/// stream `k` of `seed`.
pub fn sample_link_pairs(
    params: &GraphModelParams,
    graphs: &[PoliticalGraph],
    ratio: f64,
    seed: u64,
) -> Result<Vec<LinkPair>, GraphLearnError> {
    let prepared = Prepared::new(params, graphs)?;
    Ok(sample_pairs_prepared(&prepared, ratio, seed))
}

fn sample_pairs_prepared(prepared: &Prepared, ratio: f64, seed: u64) -> Vec<LinkPair> {
    let mut out = Vec::new();
    for (k, (g, view)) in prepared.graphs.iter().zip(&prepared.views).enumerate() {
        for (&src, &dst) in view.src.iter().zip(&view.dst) {
            out.push(LinkPair { graph: k, src, dst, label: true });
        }
        let count = (ratio * view.edge_count() as f64).round() as usize;
        let mut rng = stream_rng(seed, k as u64);
        for (src, dst) in sample_absent(g, view, count, &mut rng) {
            out.push(LinkPair { graph: k, src, dst, label: false });
        }
    }
    out
}

/// Observed graphs with a fraction of edges removed, plus the removed edges
/// as positives and as many absent pairs (absent from the full graph) as
/// negatives.
#[derive(Debug, Clone)]
pub struct LinkSplit {
    pub observed: GraphDataset,
    pub held_out: Vec<LinkPair>,
}

/// Holds out `round(fraction * |E|)` edges per graph. Graph `k` uses stream
/// `k` of `seed`: first a shuffle of its edge indices, then the negatives.
pub fn holdout_edges(ds: &GraphDataset, fraction: f64, seed: u64) -> Result<LinkSplit, GraphLearnError> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(GraphLearnError::Argument(format!("hold-out fraction {fraction} must lie in [0, 1)")));
    }
    let mut observed = ds.clone();
    let mut held_out = Vec::new();
    for (k, g) in ds.graphs.iter().enumerate() {
        let view = GraphView::new(g, ds.dims.m, ds.dims.p)?;
        let mut rng = stream_rng(seed, k as u64);
        let mut order: Vec<usize> = (0..g.edges.len()).collect();
        order.shuffle(&mut rng);
        let count = (fraction * g.edges.len() as f64).round() as usize;
        let mut removed: Vec<usize> = order[..count].to_vec();
        removed.sort_unstable();
        for &e in &removed {
            held_out.push(LinkPair {
                graph: k,
                src: view.src[e],
                dst: view.dst[e],
                label: true,
            });
        }
        for (src, dst) in sample_absent(g, &view, count, &mut rng) {
            held_out.push(LinkPair { graph: k, src, dst, label: false });
        }
        let keep: Vec<bool> = (0..g.edges.len()).map(|e| removed.binary_search(&e).is_err()).collect();
        observed.graphs[k].edges = g
            .edges
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(e, _)| e.clone())
            .collect();
    }
    Ok(LinkSplit { observed, held_out })
}

/// Mean loss and its exact gradient over the batch.
///
/// Graph task: mean over graphs and label columns of cross-entropy (binary
/// columns, clipped at `EPS_CLIP`) or squared error (real columns). Node
/// task: mean cross-entropy over labeled nodes. Link task: mean cross-entropy
/// over the given pairs. Accumulation runs in graph order, then node order.
pub fn loss_and_gradients(
    params: &GraphModelParams,
    batch: &Batch,
) -> Result<(f64, GraphModelParams), GraphLearnError> {
    let prepared = Prepared::new(params, batch.graphs)?;
    loss_and_gradients_prepared(params, &prepared, batch.task, batch.pairs)
}

pub(crate) fn loss_and_gradients_prepared(
    params: &GraphModelParams,
    prepared: &Prepared,
    task: Task,
    pairs: &[LinkPair],
) -> Result<(f64, GraphModelParams), GraphLearnError> {
    if prepared.graphs.is_empty() {
        return Err(GraphLearnError::Task("empty batch".into()));
    }
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    let mut count = 0usize;

    let mut pairs_by_graph: Vec<Vec<&LinkPair>> = vec![Vec::new(); prepared.graphs.len()];
    if task == Task::Link {
        if pairs.is_empty() {
            return Err(GraphLearnError::Task("link task needs at least one scored pair".into()));
        }
        for pr in pairs {
            let Some(view) = prepared.views.get(pr.graph) else {
                return Err(GraphLearnError::Task(format!("pair references graph {} outside the batch", pr.graph)));
            };
            if pr.src >= view.n || pr.dst >= view.n || pr.src == pr.dst {
                return Err(GraphLearnError::Task(format!("invalid pair ({}, {})", pr.src, pr.dst)));
            }
            pairs_by_graph[pr.graph].push(pr);
        }
    }

    for (k, (g, view)) in prepared.graphs.iter().zip(&prepared.views).enumerate() {
        let mut heads = HeadGrads::default();
        match task {
            Task::GraphLabel => {
                if g.label.len() != params.labels() {
                    return Err(GraphLearnError::Task(format!(
                        "graph {} has {} labels, model predicts {}",
                        g.graph_id,
                        g.label.len(),
                        params.labels()
                    )));
                }
            }
            Task::NodeLabel => {
                if g.node_labels.as_ref().is_some_and(|l| l.len() != view.n) {
                    return Err(GraphLearnError::Task(format!("graph {} node labels misaligned", g.graph_id)));
                }
                let labeled = g.node_labels.as_ref().is_some_and(|l| l.iter().any(Option::is_some));
                if !labeled {
                    continue;
                }
            }
            Task::Link => {
                if pairs_by_graph[k].is_empty() {
                    continue;
                }
            }
        }

        let cache = forward_view(params, view);
        match task {
            Task::GraphLabel => {
                let mut d = vec![0.0; params.labels()];
                for (c, kind) in params.label_kinds.iter().enumerate() {
                    let o = cache.graph_logits[c];
                    let y = g.label[c];
                    match kind {
                        LabelKind::Binary => {
                            let p = sigmoid(o);
                            let (l, dp) = bce(p, y);
                            total += l;
                            d[c] = dp * p * (1.0 - p);
                        }
                        LabelKind::Real => {
                            total += (o - y) * (o - y);
                            d[c] = 2.0 * (o - y);
                        }
                    }
                    count += 1;
                }
                heads.graph = Some(d);
            }
            Task::NodeLabel => {
                let labels = g.node_labels.as_ref().expect("checked above");
                let mut d = vec![0.0; view.n];
                for (i, y) in labels.iter().enumerate() {
                    let Some(y) = y else { continue };
                    let p = sigmoid(cache.node_logits[i]);
                    let (l, dp) = bce(p, *y);
                    total += l;
                    d[i] = dp * p * (1.0 - p);
                    count += 1;
                }
                heads.node = Some(d);
            }
            Task::Link => {
                let emb = cache.embeddings();
                for pr in &pairs_by_graph[k] {
                    let p = sigmoid(link_logit(params, emb, pr.src, pr.dst));
                    let y = if pr.label { 1.0 } else { 0.0 };
                    let (l, dp) = bce(p, y);
                    total += l;
                    heads.links.push((pr.src, pr.dst, dp * p * (1.0 - p)));
                    count += 1;
                }
            }
        }
        backward_view(params, view, &cache, &heads, &mut grads);
    }

    if count == 0 {
        return Err(GraphLearnError::Task(format!("no {task:?} targets in batch")));
    }
    let inv = 1.0 / count as f64;
    grads.scale(inv);
    Ok((total * inv, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_metric: Option<f64>,
}

/// Headline validation metric: AUC for graph (first binary column) and link
/// tasks, accuracy for the node task, MSE when a graph task has no binary column.
fn headline(m: &Metrics, task: Task) -> Option<f64> {
    match task {
        Task::GraphLabel => m.auc.or(m.mse),
        Task::NodeLabel => m.accuracy,
        Task::Link => m.auc,
    }
}

/// Full-batch gradient descent with a fixed step. The link task redraws its
/// negatives every epoch from a seed derived from `(cfg.seed, epoch)`.
pub fn train(
    params: &GraphModelParams,
    train_ds: &GraphDataset,
    val_ds: &GraphDataset,
    cfg: &TrainConfig,
) -> Result<(GraphModelParams, Vec<EpochRecord>), GraphLearnError> {
    if train_ds.is_empty() {
        return Err(GraphLearnError::Task("training set is empty".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.lr.is_finite()) {
        return Err(GraphLearnError::Argument(format!("learning rate {} must be non-negative", cfg.lr)));
    }
    check_params(params, train_ds.dims.m, train_ds.dims.p)?;
    let prepared = Prepared::new(params, &train_ds.graphs)?;
    let val_prepared = Prepared::new(params, &val_ds.graphs)?;
    let val_pairs = if cfg.task == Task::Link && !val_ds.is_empty() {
        sample_pairs_prepared(&val_prepared, 1.0, derive_seed(cfg.seed, "val-link-pairs"))
    } else {
        Vec::new()
    };

    let mut current = params.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let pairs = if cfg.task == Task::Link {
            let seed = derive_seed(cfg.seed.wrapping_add(epoch as u64), "link-negatives");
            sample_pairs_prepared(&prepared, cfg.negative_ratio, seed)
        } else {
            Vec::new()
        };
        let (loss, grads) = loss_and_gradients_prepared(&current, &prepared, cfg.task, &pairs)?;
        if !loss.is_finite() {
            return Err(GraphLearnError::Numeric { epoch });
        }
        let val_metric = if val_ds.is_empty() {
            None
        } else {
            headline(&evaluate_prepared(&current, &val_prepared, cfg.task, &val_pairs), cfg.task)
        };
        history.push(EpochRecord { epoch, loss, val_metric });
        current.add_scaled(&grads, -cfg.lr);
        if !current.is_finite() {
            return Err(GraphLearnError::Numeric { epoch });
        }
    }
    Ok((current, history))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub mse: Option<f64>,
}

/// Scores every target of the task. Graph task: accuracy and AUC on the first
/// binary column, MSE over real columns. Node task: accuracy and AUC over
/// labeled nodes. Link task: AUC and accuracy over every edge plus an equal
/// number of absent pairs drawn with seed 0.
pub fn evaluate(params: &GraphModelParams, ds: &GraphDataset, task: Task) -> Result<Metrics, GraphLearnError> {
    if ds.is_empty() {
        return Err(GraphLearnError::Task("evaluation set is empty".into()));
    }
    check_params(params, ds.dims.m, ds.dims.p)?;
    let prepared = Prepared::new(params, &ds.graphs)?;
    let pairs = if task == Task::Link {
        sample_pairs_prepared(&prepared, 1.0, 0)
    } else {
        Vec::new()
    };
    Ok(evaluate_prepared(params, &prepared, task, &pairs))
}

/// Link metrics on explicit pairs, e.g. from [`holdout_edges`].
pub fn evaluate_pairs(
    params: &GraphModelParams,
    ds: &GraphDataset,
    pairs: &[LinkPair],
) -> Result<Metrics, GraphLearnError> {
    let prepared = Prepared::new(params, &ds.graphs)?;
    Ok(evaluate_prepared(params, &prepared, Task::Link, pairs))
}

pub(crate) fn evaluate_prepared(params: &GraphModelParams, prepared: &Prepared, task: Task, pairs: &[LinkPair]) -> Metrics {
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    let mut reals_pred = Vec::new();
    let mut reals_true = Vec::new();
    let first_binary = params.label_kinds.iter().position(|k| *k == LabelKind::Binary);

    let mut pairs_by_graph: Vec<Vec<&LinkPair>> = vec![Vec::new(); prepared.graphs.len()];
    for pr in pairs {
        if pr.graph < pairs_by_graph.len() {
            pairs_by_graph[pr.graph].push(pr);
        }
    }
    for (k, (g, view)) in prepared.graphs.iter().zip(&prepared.views).enumerate() {
        if task == Task::Link && pairs_by_graph[k].is_empty() {
            continue;
        }
        let cache = forward_view(params, view);
        match task {
            Task::GraphLabel => {
                let out = graph_outputs(params, &cache.graph_logits);
                if let Some(c) = first_binary {
                    probs.push(out[c]);
                    labels.push(g.label.get(c).copied().unwrap_or(0.0) > 0.5);
                }
                for (c, kind) in params.label_kinds.iter().enumerate() {
                    if *kind == LabelKind::Real {
                        reals_pred.push(out[c]);
                        reals_true.push(g.label.get(c).copied().unwrap_or(0.0));
                    }
                }
            }
            Task::NodeLabel => {
                if let Some(nl) = &g.node_labels {
                    for (i, y) in nl.iter().enumerate() {
                        if let Some(y) = y {
                            probs.push(sigmoid(cache.node_logits[i]));
                            labels.push(*y > 0.5);
                        }
                    }
                }
            }
            Task::Link => {
                let emb = cache.embeddings();
                for pr in &pairs_by_graph[k] {
                    probs.push(sigmoid(link_logit(params, emb, pr.src, pr.dst)));
                    labels.push(pr.label);
                }
            }
        }
    }
    let loss = if probs.is_empty() {
        None
    } else {
        let s: f64 = probs
            .iter()
            .zip(&labels)
            .map(|(&p, &l)| bce(p, if l { 1.0 } else { 0.0 }).0)
            .sum();
        Some(s / probs.len() as f64)
    };
    Metrics {
        loss,
        accuracy: metrics::accuracy(&probs, &labels),
        auc: if probs.is_empty() { None } else { metrics::auc(&probs, &labels) },
        mse: metrics::mse(&reals_pred, &reals_true),
    }
}
