use serde::{Deserialize, Serialize};

use super::report::InterventionReport;
use super::InterveneError;
use crate::data::{Edge, GraphDataset, PoliticalGraph};
use crate::graphlearn::{forward_graph, GraphModelParams};

/// A directed edge that could be added to a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCandidate {
    pub src: u64,
    pub dst: u64,
    pub features: Vec<f64>,
}

fn check_outcome(params: &GraphModelParams, outcome: usize) -> Result<(), InterveneError> {
    if outcome >= params.labels() {
        return Err(InterveneError::Argument(format!(
            "outcome index {outcome} out of range for {} graph labels",
            params.labels()
        )));
    }
    Ok(())
}

fn check_addition(g: &PoliticalGraph, c: &EdgeCandidate) -> Result<(), InterveneError> {
    if c.src == c.dst {
        return Err(InterveneError::Argument(format!("candidate {}->{} is a self-loop", c.src, c.dst)));
    }
    if g.index_of(c.src).is_none() || g.index_of(c.dst).is_none() {
        return Err(InterveneError::Argument(format!("candidate {}->{} references a missing node", c.src, c.dst)));
    }
    if g.has_edge(c.src, c.dst) {
        return Err(InterveneError::Argument(format!("candidate {}->{} is already present", c.src, c.dst)));
    }
    Ok(())
}

fn outcome_prob(params: &GraphModelParams, g: &PoliticalGraph, outcome: usize) -> Result<f64, InterveneError> {
    Ok(forward_graph(params, g)?.graph[outcome])
}

fn with_edge(g: &PoliticalGraph, c: &EdgeCandidate) -> PoliticalGraph {
    let mut h = g.clone();
    h.edges.push(Edge { src: c.src, dst: c.dst, features: c.features.clone() });
    h
}

/// Scores each candidate by the outcome probability of `g` plus that edge.
/// The baseline is the probability on `g` itself; ties keep candidate order.
pub fn rank_edge_additions(
    params: &GraphModelParams,
    g: &PoliticalGraph,
    candidates: &[EdgeCandidate],
    outcome: usize,
) -> Result<InterventionReport, InterveneError> {
    check_outcome(params, outcome)?;
    candidates.iter().try_for_each(|c| check_addition(g, c))?;
    let baseline = outcome_prob(params, g, outcome)?;
    let scored = candidates
        .iter()
        .enumerate()
        .map(|(k, c)| Ok((k, format!("add {}->{}", c.src, c.dst), outcome_prob(params, &with_edge(g, c), outcome)?)))
        .collect::<Result<Vec<_>, InterveneError>>()?;
    Ok(InterventionReport::ranked("edge_additions", baseline, scored))
}

/// Ranks every graph by its outcome probability; the first item is the
/// nomination. Ties go to the smaller graph id. The baseline is the mean
/// probability over the dataset.
pub fn nominate_jurisdiction(
    params: &GraphModelParams,
    ds: &GraphDataset,
    outcome: usize,
) -> Result<InterventionReport, InterveneError> {
    check_outcome(params, outcome)?;
    if ds.is_empty() {
        return Err(InterveneError::Argument("dataset has no graphs".into()));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by_key(|&k| ds.graphs[k].graph_id);
    let scored = order
        .into_iter()
        .map(|k| {
            let g = &ds.graphs[k];
            Ok((k, format!("graph {}", g.graph_id), outcome_prob(params, g, outcome)?))
        })
        .collect::<Result<Vec<_>, InterveneError>>()?;
    let baseline = scored.iter().map(|s| s.2).sum::<f64>() / scored.len() as f64;
    Ok(InterventionReport::ranked("jurisdiction", baseline, scored))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersuadableNode {
    pub node_id: u64,
    pub probability: f64,
    /// `|probability - 0.5|`; smaller means closer to undecided.
    pub margin: f64,
}

/// Orders `(node id, probability)` pairs by ascending margin from 0.5, ties
/// by node id, and keeps the first `top_k` (clamped to the input length).
pub fn rank_by_margin(nodes: &[(u64, f64)], top_k: usize) -> Vec<PersuadableNode> {
    let mut out: Vec<PersuadableNode> = nodes
        .iter()
        .map(|&(node_id, probability)| PersuadableNode { node_id, probability, margin: (probability - 0.5).abs() })
        .collect();
    out.sort_by(|a, b| a.margin.total_cmp(&b.margin).then(a.node_id.cmp(&b.node_id)));
    if top_k > out.len() {
        log::warn!("top_k {top_k} exceeds {} nodes; returning all", out.len());
    }
    out.truncate(top_k);
    out
}

/// Nodes whose predicted probability from the node head is closest to 0.5.
pub fn rank_persuadable_nodes(
    params: &GraphModelParams,
    g: &PoliticalGraph,
    top_k: usize,
) -> Result<Vec<PersuadableNode>, InterveneError> {
    let probs = forward_graph(params, g)?.node_probs;
    let pairs: Vec<(u64, f64)> = g.nodes.iter().map(|n| n.id).zip(probs).collect();
    Ok(rank_by_margin(&pairs, top_k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defense {
    /// Attacker's best single-addition gain on the unmodified graph.
    pub baseline: f64,
    /// Attacker's best gain after each removal, in removal order.
    pub values: Vec<f64>,
    /// Index of the removal with the smallest attacker gain (first on ties);
    /// `None` when there is nothing to remove.
    pub choice: Option<usize>,
}

impl Defense {
    pub fn value(&self) -> Option<f64> {
        self.choice.map(|k| self.values[k])
    }
}

/// Largest `prob(h + e) - prob(h)` over the additions; 0 when there are none.
fn attacker_best(
    params: &GraphModelParams,
    h: &PoliticalGraph,
    additions: &[EdgeCandidate],
    outcome: usize,
) -> Result<f64, InterveneError> {
    if additions.is_empty() {
        return Ok(0.0);
    }
    let base = outcome_prob(params, h, outcome)?;
    let mut best = f64::NEG_INFINITY;
    for c in additions {
        best = best.max(outcome_prob(params, &with_edge(h, c), outcome)? - base);
    }
    Ok(best)
}

/// Single-round minimax: pick the edge removal that minimizes the attacker's
/// best single-edge-addition gain.
pub fn defend_minimax(
    params: &GraphModelParams,
    g: &PoliticalGraph,
    removals: &[(u64, u64)],
    additions: &[EdgeCandidate],
    outcome: usize,
) -> Result<Defense, InterveneError> {
    check_outcome(params, outcome)?;
    for &(s, d) in removals {
        if !g.has_edge(s, d) {
            return Err(InterveneError::Argument(format!("removal {s}->{d} is not an edge of the graph")));
        }
    }
    additions.iter().try_for_each(|c| check_addition(g, c))?;
    let baseline = attacker_best(params, g, additions, outcome)?;
    let mut values = Vec::with_capacity(removals.len());
    for &(s, d) in removals {
        let mut h = g.clone();
        h.edges.retain(|e| (e.src, e.dst) != (s, d));
        values.push(attacker_best(params, &h, additions, outcome)?);
    }
    let choice = (0..values.len()).reduce(|best, k| if values[k] < values[best] { k } else { best });
    Ok(Defense { baseline, values, choice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphlearn::init_model;
    use crate::synthgen::{gen_graph_dataset, GraphGenConfig};

    fn setup(seed: u64) -> (GraphModelParams, GraphDataset) {
        let ds = gen_graph_dataset(&GraphGenConfig { n: 8, k: 3, ..Default::default() }, seed).unwrap();
        (init_model(&ds.dims, 2, 4, seed), ds)
    }

    fn absent(g: &PoliticalGraph, count: usize) -> Vec<EdgeCandidate> {
        let mut out = Vec::new();
        for s in &g.nodes {
            for d in &g.nodes {
                if s.id != d.id && !g.has_edge(s.id, d.id) && out.len() < count {
                    out.push(EdgeCandidate { src: s.id, dst: d.id, features: vec![0.5, 1.0, 0.0, 0.0] });
                }
            }
        }
        out
    }

    #[test]
    fn empty_candidates_report_baseline() {
        let (p, ds) = setup(1);
        let r = rank_edge_additions(&p, &ds.graphs[0], &[], 0).unwrap();
        assert!(r.items.is_empty());
        assert_eq!(r.baseline, forward_graph(&p, &ds.graphs[0]).unwrap().graph[0]);
    }

    #[test]
    fn silenced_neighbors_make_edges_irrelevant() {
        let (mut p, ds) = setup(2);
        p.layers.iter_mut().for_each(|l| l.w_nbr.fill(0.0));
        let g = &ds.graphs[0];
        let r = rank_edge_additions(&p, g, &absent(g, 6), 0).unwrap();
        assert!(r.items.iter().all(|i| i.delta == 0.0));
        assert_eq!(r.items.iter().map(|i| i.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn present_or_bad_candidates_are_rejected() {
        let (p, ds) = setup(3);
        let g = &ds.graphs[0];
        let e = &g.edges[0];
        let dup = EdgeCandidate { src: e.src, dst: e.dst, features: vec![0.0; 4] };
        assert!(rank_edge_additions(&p, g, &[dup], 0).is_err());
        let lp = EdgeCandidate { src: 1, dst: 1, features: vec![0.0; 4] };
        assert!(rank_edge_additions(&p, g, &[lp], 0).is_err());
        assert!(rank_edge_additions(&p, g, &[], 5).is_err());
    }

    #[test]
    fn identical_graphs_nominate_the_smaller_id() {
        let (p, ds) = setup(4);
        let mut twin = ds.graphs[0].clone();
        twin.graph_id = 7;
        let mut first = ds.graphs[0].clone();
        first.graph_id = 3;
        let pair = ds.with_graphs(vec![twin, first]);
        assert_eq!(nominate_jurisdiction(&p, &pair, 0).unwrap().top().unwrap().action, "graph 3");
        let single = ds.with_graphs(vec![ds.graphs[1].clone()]);
        assert_eq!(nominate_jurisdiction(&p, &single, 0).unwrap().top().unwrap().index, 0);
        assert!(nominate_jurisdiction(&p, &ds.with_graphs(vec![]), 0).is_err());
    }

    #[test]
    fn margin_ordering() {
        let r = rank_by_margin(&[(0, 0.9), (1, 0.55), (2, 0.2)], 3);
        assert_eq!(r.iter().map(|n| n.node_id).collect::<Vec<_>>(), vec![1, 2, 0]);
        let ties = rank_by_margin(&[(5, 0.5), (2, 0.5), (9, 0.5)], 10);
        assert_eq!(ties.iter().map(|n| n.node_id).collect::<Vec<_>>(), vec![2, 5, 9]);
        assert_eq!(rank_by_margin(&[(1, 0.1), (2, 0.2)], 1).len(), 1);
    }

    #[test]
    fn defense_edge_cases() {
        let (p, ds) = setup(5);
        let g = &ds.graphs[0];
        let adds = absent(g, 3);
        let none = defend_minimax(&p, g, &[], &adds, 0).unwrap();
        assert_eq!(none.choice, None);
        assert!(none.values.is_empty());
        let removals: Vec<(u64, u64)> = g.edges.iter().take(3).map(|e| (e.src, e.dst)).collect();
        let quiet = defend_minimax(&p, g, &removals, &[], 0).unwrap();
        assert!(quiet.values.iter().all(|v| *v == 0.0));
        assert_eq!(quiet.choice, Some(0));
        assert_eq!(quiet.baseline, 0.0);
        assert!(defend_minimax(&p, g, &[(0, 0)], &adds, 0).is_err());
    }
}
