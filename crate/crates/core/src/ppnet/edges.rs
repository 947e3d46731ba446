use serde::{Deserialize, Serialize};

use super::PpnetError;
use crate::data::{Edge, GraphDims, Node, NodeKind, PoliticalGraph};
use crate::synthgen::{EDGE_FEATURES, EDGE_FREQUENCY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredEdges {
    /// `(v, u)` with `W_hat[v, u] > tau`, row-major order.
    pub edges: Vec<(usize, usize)>,
    /// Node ids `0..n` without features; each edge carries `[W_hat, 0, 0, 0]`.
    pub graph: PoliticalGraph,
}

impl InferredEdges {
    /// Dimensions of [`InferredEdges::graph`]: no node features, no labels.
    pub fn dims() -> GraphDims {
        GraphDims::new(0, EDGE_FEATURES, Vec::new())
    }
}

/// Off-diagonal entries of the row-major `n x n` matrix `w_hat` strictly above
/// `tau`. Self-excitation is not a link between actors and is never returned.
pub fn infer_edges(w_hat: &[f64], n: usize, tau: f64) -> Result<InferredEdges, PpnetError> {
    if w_hat.len() != n * n {
        return Err(PpnetError::Data(format!("W has {} entries, expected {}", w_hat.len(), n * n)));
    }
    if !(tau >= 0.0) {
        return Err(PpnetError::Config(format!("threshold {tau} must be non-negative")));
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|v| (0..n).map(move |u| (v, u)))
        .filter(|&(v, u)| v != u && w_hat[v * n + u] > tau)
        .collect();
    let graph = PoliticalGraph {
        graph_id: 0,
        nodes: (0..n as u64).map(|id| Node { id, kind: NodeKind::Legislator, features: Vec::new() }).collect(),
        edges: edges
            .iter()
            .map(|&(v, u)| {
                let mut features = vec![0.0; EDGE_FEATURES];
                features[EDGE_FREQUENCY] = w_hat[v * n + u];
                Edge { src: v as u64, dst: u as u64, features }
            })
            .collect(),
        label: Vec::new(),
        node_labels: None,
    };
    Ok(InferredEdges { edges, graph })
}
