use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forward::{check_params, forward_graph};
use super::model::GraphModelParams;
use super::train::{loss_and_gradients_prepared, sample_link_pairs, Prepared, Task};
use super::GraphLearnError;
use crate::data::{GraphDataset, LabelKind, PoliticalGraph};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// `node:<k>` for node feature columns, `edge:<k>` for edge feature columns.
    pub feature: String,
    pub importance: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Node(usize),
    Edge(usize),
}

fn shuffle_column(graphs: &mut [PoliticalGraph], col: Column, rng: &mut impl rand::Rng) {
    for g in graphs {
        match col {
            Column::Node(f) => {
                let mut vals: Vec<f64> = g.nodes.iter().map(|n| n.features[f]).collect();
                vals.shuffle(rng);
                for (n, v) in g.nodes.iter_mut().zip(vals) {
                    n.features[f] = v;
                }
            }
            Column::Edge(f) => {
                let mut vals: Vec<f64> = g.edges.iter().map(|e| e.features[f]).collect();
                vals.shuffle(rng);
                for (e, v) in g.edges.iter_mut().zip(vals) {
                    e.features[f] = v;
                }
            }
        }
    }
}

/// Permutation importance of every node and edge feature column.
///
/// The score is the negative task loss (higher is better), so
/// `importance_f = score(original) - mean_r score(column f shuffled)`, i.e. the
/// mean loss increase. Shuffles permute a column within each graph. Repeat `r`
/// of column index `c` (node columns first, then edge columns) uses stream
/// `r * (m + p) + c` of `seed`. Link-task pairs are fixed once (ratio 1,
/// stream seed `seed`) before any shuffle.
pub fn permutation_importance(
    params: &GraphModelParams,
    ds: &GraphDataset,
    task: Task,
    repeats: usize,
    seed: u64,
) -> Result<Vec<FeatureImportance>, GraphLearnError> {
    if ds.is_empty() {
        return Err(GraphLearnError::Task("importance needs a non-empty dataset".into()));
    }
    check_params(params, ds.dims.m, ds.dims.p)?;
    let pairs = if task == Task::Link {
        sample_link_pairs(params, &ds.graphs, 1.0, seed)?
    } else {
        Vec::new()
    };
    let score = |graphs: &[PoliticalGraph]| -> Result<f64, GraphLearnError> {
        let prepared = Prepared::new(params, graphs)?;
        Ok(-loss_and_gradients_prepared(params, &prepared, task, &pairs)?.0)
    };
    let base = score(&ds.graphs)?;
    let columns: Vec<Column> = (0..ds.dims.m)
        .map(Column::Node)
        .chain((0..ds.dims.p).map(Column::Edge))
        .collect();
    let width = columns.len() as u64;

    let mut out = Vec::with_capacity(columns.len());
    for (c, &col) in columns.iter().enumerate() {
        let mut drops = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let mut rng = stream_rng(seed, r as u64 * width + c as u64);
            let mut graphs = ds.graphs.clone();
            shuffle_column(&mut graphs, col, &mut rng);
            drops.push(base - score(&graphs)?);
        }
        let mean = if drops.is_empty() { 0.0 } else { drops.iter().sum::<f64>() / drops.len() as f64 };
        let std = if drops.len() > 1 {
            (drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (drops.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let feature = match col {
            Column::Node(f) => format!("node:{f}"),
            Column::Edge(f) => format!("edge:{f}"),
        };
        out.push(FeatureImportance { feature, importance: mean, std });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substructure {
    /// Retained edges as `(src, dst)` node ids, sorted.
    pub edges: Vec<(u64, u64)>,
    /// Target-class probability under the retained edges only.
    pub probability: f64,
    /// Target-class probability with every edge present.
    pub full_probability: f64,
    /// Class predicted on the full graph (1 when its probability exceeds 0.5).
    pub target_class: u8,
}

/// Probability the model assigns to `class` on graph-label column `column`.
pub(crate) fn class_probability(
    params: &GraphModelParams,
    g: &PoliticalGraph,
    column: usize,
    class: u8,
) -> Result<f64, GraphLearnError> {
    let p = forward_graph(params, g)?.graph[column];
    Ok(if class == 1 { p } else { 1.0 - p })
}

/// Greedy backward elimination: drops, one at a time, the edge whose removal
/// leaves the highest target-class probability until `budget` edges remain.
/// Ties go to the smallest `(src, dst)`.
pub fn extract_substructure(
    params: &GraphModelParams,
    g: &PoliticalGraph,
    column: usize,
    budget: usize,
) -> Result<Substructure, GraphLearnError> {
    if column >= params.labels() || params.label_kinds[column] != LabelKind::Binary {
        return Err(GraphLearnError::Argument(format!("column {column} is not a binary graph label")));
    }
    if budget > g.edges.len() {
        return Err(GraphLearnError::Argument(format!(
            "budget {budget} exceeds the {} edges of graph {}",
            g.edges.len(),
            g.graph_id
        )));
    }
    let full_p = forward_graph(params, g)?.graph[column];
    let class = u8::from(full_p > 0.5);
    let full_probability = if class == 1 { full_p } else { 1.0 - full_p };

    let mut current = g.clone();
    current.edges.sort_by_key(|e| (e.src, e.dst));
    let mut probability = full_probability;
    while current.edges.len() > budget {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..current.edges.len() {
            let mut trial = current.clone();
            trial.edges.remove(k);
            let p = class_probability(params, &trial, column, class)?;
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((k, p));
            }
        }
        let (k, p) = best.expect("at least one edge");
        current.edges.remove(k);
        probability = p;
    }
    Ok(Substructure {
        edges: current.edges.iter().map(|e| (e.src, e.dst)).collect(),
        probability,
        full_probability,
        target_class: class,
    })
}
