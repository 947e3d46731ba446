use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::data::{Edge, GraphDataset, GraphDims, LabelKind, Node, NodeKind, PoliticalGraph};
use crate::math::sigmoid;
use crate::rng::{stream_rng, StreamRng};

/// Node feature layout: `[party, seniority, z1, z2]`.
pub const NODE_FEATURES: usize = 4;
/// Edge feature layout: `[frequency, type0, type1, type2]`.
pub const EDGE_FEATURES: usize = 4;
pub const RELATIONSHIP_TYPES: usize = 3;

pub const FEATURE_PARTY: usize = 0;
pub const FEATURE_SENIORITY: usize = 1;
pub const FEATURE_Z1: usize = 2;
pub const FEATURE_Z2: usize = 3;
pub const EDGE_FREQUENCY: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphGenConfig {
    /// Nodes per graph.
    pub n: usize,
    /// Probability of a directed edge between members of the same party.
    pub q_in: f64,
    /// Probability of a directed edge across parties.
    pub q_out: f64,
    /// Weight of the member's own party alignment with the bill.
    pub w_p: f64,
    /// Weight of the communication-weighted alignment of in-neighbors.
    pub w_c: f64,
    /// Number of graphs.
    pub k: usize,
}

impl Default for GraphGenConfig {
    fn default() -> Self {
        Self {
            n: 30,
            q_in: 0.3,
            q_out: 0.05,
            w_p: 3.0,
            w_c: 1.0,
            k: 100,
        }
    }
}

impl GraphGenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n < 2 {
            return Err(SynthError::Config(format!("n = {} must be at least 2", self.n)));
        }
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !(prob(self.q_in) && prob(self.q_out) && self.q_out <= self.q_in) {
            return Err(SynthError::Config(format!(
                "need 0 <= q_out <= q_in <= 1, got q_in = {}, q_out = {}",
                self.q_in, self.q_out
            )));
        }
        if !(self.w_p.is_finite() && self.w_c.is_finite()) {
            return Err(SynthError::Config("mechanism weights must be finite".into()));
        }
        Ok(())
    }
}

/// Per-graph hidden variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTruth {
    pub graph_id: u64,
    /// Bill lean.
    pub beta: f64,
    pub party: Vec<i8>,
}

/// Generator sidecar stored in `GraphDataset::ground_truth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphGenTruth {
    pub seed: u64,
    pub w_p: f64,
    pub w_c: f64,
    pub graphs: Vec<GraphTruth>,
}

impl GraphGenTruth {
    pub fn from_dataset(ds: &GraphDataset) -> Option<Self> {
        serde_json::from_value(ds.ground_truth.clone()?).ok()
    }
}

pub fn graph_dims() -> GraphDims {
    GraphDims::new(NODE_FEATURES, EDGE_FEATURES, vec![LabelKind::Binary, LabelKind::Real])
}

/// Stream that draws the structure and features of graph `k`.
fn structure_stream(seed: u64, k: u64) -> StreamRng {
    stream_rng(seed, 2 * k)
}

/// Stream that draws the votes of graph `k`.
fn vote_stream(seed: u64, k: u64) -> StreamRng {
    stream_rng(seed, 2 * k + 1)
}

/// Yes-vote probability of every node given the bill lean:
/// `sigmoid(w_p * party_i * beta + w_c * mean_{j -> i}(freq_ji * party_j) * beta)`,
/// with the neighbor mean taken as 0 for nodes without incoming edges.
/// Reads party and frequency from the observed features.
pub fn vote_probabilities(g: &PoliticalGraph, beta: f64, w_p: f64, w_c: f64) -> Vec<f64> {
    let n = g.nodes.len();
    let mut acc = vec![0.0; n];
    let mut indeg = vec![0usize; n];
    for e in &g.edges {
        let (Some(j), Some(i)) = (g.index_of(e.src), g.index_of(e.dst)) else {
            continue;
        };
        acc[i] += e.features[EDGE_FREQUENCY] * g.nodes[j].features[FEATURE_PARTY] * beta;
        indeg[i] += 1;
    }
    (0..n)
        .map(|i| {
            let party = g.nodes[i].features[FEATURE_PARTY];
            let nbr = if indeg[i] > 0 { acc[i] / indeg[i] as f64 } else { 0.0 };
            sigmoid(w_p * party * beta + w_c * nbr)
        })
        .collect()
}

/// Draws votes from the vote stream of graph `k` and returns
/// `(node labels, graph label [passed, yes-share])`.
pub fn draw_votes(seed: u64, k: u64, probs: &[f64]) -> (Vec<Option<f64>>, Vec<f64>) {
    let mut rng = vote_stream(seed, k);
    let votes: Vec<f64> = probs
        .iter()
        .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    let share = votes.iter().sum::<f64>() / votes.len() as f64;
    let passed = if share > 0.5 { 1.0 } else { 0.0 };
    (votes.into_iter().map(Some).collect(), vec![passed, share])
}

/// Generates `cfg.k` legislative graphs with a planted vote mechanism.
///
/// Draw order for graph `k` on its structure stream: for each node in id
/// order `party` (fair coin, +1/-1), `seniority ~ U[0,1)`, `z1`, `z2 ~ N(0,1)`;
/// then for each ordered pair `(i, j)`, `i != j`, row-major, a presence
/// uniform and, when present, `freq ~ U[0.1, 1)` and a relationship type
/// uniform over 3; finally the bill lean `beta ~ U[-1, 1)`. Votes are drawn on
/// the separate vote stream, one uniform per node.
pub fn gen_graph_dataset(cfg: &GraphGenConfig, seed: u64) -> Result<GraphDataset, SynthError> {
    cfg.validate()?;
    let mut ds = GraphDataset::new(graph_dims());
    let mut truth = GraphGenTruth {
        seed,
        w_p: cfg.w_p,
        w_c: cfg.w_c,
        graphs: Vec::with_capacity(cfg.k),
    };
    for k in 0..cfg.k as u64 {
        let (g, t) = gen_one_graph(cfg, seed, k);
        ds.graphs.push(g);
        truth.graphs.push(t);
    }
    ds.ground_truth = Some(serde_json::to_value(&truth).expect("sidecar serializes"));
    Ok(ds)
}

fn gen_one_graph(cfg: &GraphGenConfig, seed: u64, k: u64) -> (PoliticalGraph, GraphTruth) {
    let mut rng = structure_stream(seed, k);
    let n = cfg.n;
    let mut party = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let side: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
        let seniority: f64 = rng.random();
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        party.push(side);
        nodes.push(Node {
            id: i as u64,
            kind: NodeKind::Legislator,
            features: vec![side as f64, seniority, z1, z2],
        });
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = if party[i] == party[j] { cfg.q_in } else { cfg.q_out };
            if rng.random::<f64>() < q {
                let freq = rng.random_range(0.1..1.0);
                let kind = rng.random_range(0..RELATIONSHIP_TYPES);
                let mut features = vec![0.0; EDGE_FEATURES];
                features[EDGE_FREQUENCY] = freq;
                features[1 + kind] = 1.0;
                edges.push(Edge {
                    src: i as u64,
                    dst: j as u64,
                    features,
                });
            }
        }
    }
    let beta: f64 = rng.random_range(-1.0..1.0);

    let mut g = PoliticalGraph {
        graph_id: k,
        nodes,
        edges,
        label: Vec::new(),
        node_labels: None,
    };
    let probs = vote_probabilities(&g, beta, cfg.w_p, cfg.w_c);
    let (votes, label) = draw_votes(seed, k, &probs);
    g.node_labels = Some(votes);
    g.label = label;
    (g, GraphTruth { graph_id: k, beta, party })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_dataset;

    #[test]
    fn zero_weights_give_coin_flip_votes() {
        let cfg = GraphGenConfig { w_p: 0.0, w_c: 0.0, k: 5, ..Default::default() };
        let ds = gen_graph_dataset(&cfg, 3).unwrap();
        let truth = GraphGenTruth::from_dataset(&ds).unwrap();
        for (g, t) in ds.graphs.iter().zip(&truth.graphs) {
            assert!(vote_probabilities(g, t.beta, 0.0, 0.0).iter().all(|&p| p == 0.5));
        }
    }

    #[test]
    fn no_edges_when_probabilities_are_zero() {
        let cfg = GraphGenConfig { q_in: 0.0, q_out: 0.0, k: 4, ..Default::default() };
        let ds = gen_graph_dataset(&cfg, 9).unwrap();
        let truth = GraphGenTruth::from_dataset(&ds).unwrap();
        for (g, t) in ds.graphs.iter().zip(&truth.graphs) {
            assert!(g.edges.is_empty());
            let probs = vote_probabilities(g, t.beta, cfg.w_p, 0.0);
            assert_eq!(probs, vote_probabilities(g, t.beta, cfg.w_p, cfg.w_c));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            GraphGenConfig { n: 1, ..Default::default() },
            GraphGenConfig { q_in: 0.1, q_out: 0.2, ..Default::default() },
            GraphGenConfig { q_in: 1.5, ..Default::default() },
            GraphGenConfig { w_p: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(gen_graph_dataset(&cfg, 0), Err(SynthError::Config(_))));
        }
    }

    #[test]
    fn output_is_valid_and_deterministic() {
        let cfg = GraphGenConfig { k: 6, n: 12, ..Default::default() };
        let a = gen_graph_dataset(&cfg, 21).unwrap();
        let b = gen_graph_dataset(&cfg, 21).unwrap();
        assert_eq!(a, b);
        assert!(validate_dataset(&a).is_ok());
        assert_ne!(a, gen_graph_dataset(&cfg, 22).unwrap());
    }

    #[test]
    fn graph_streams_are_independent_of_k() {
        let small = gen_graph_dataset(&GraphGenConfig { k: 3, ..Default::default() }, 5).unwrap();
        let large = gen_graph_dataset(&GraphGenConfig { k: 8, ..Default::default() }, 5).unwrap();
        assert_eq!(small.graphs[..], large.graphs[..3]);
    }

    #[test]
    fn outcomes_resimulate_from_sidecar() {
        let ds = gen_graph_dataset(&GraphGenConfig { k: 10, ..Default::default() }, 17).unwrap();
        let truth = GraphGenTruth::from_dataset(&ds).unwrap();
        for (g, t) in ds.graphs.iter().zip(&truth.graphs) {
            let parties: Vec<i8> = g.nodes.iter().map(|n| n.features[FEATURE_PARTY] as i8).collect();
            assert_eq!(parties, t.party);
            let probs = vote_probabilities(g, t.beta, truth.w_p, truth.w_c);
            let (votes, label) = draw_votes(truth.seed, t.graph_id, &probs);
            assert_eq!(g.node_labels.as_ref().unwrap(), &votes);
            assert_eq!(g.label, label);
        }
    }

    #[test]
    fn edge_features_follow_layout() {
        let ds = gen_graph_dataset(&GraphGenConfig { k: 2, ..Default::default() }, 1).unwrap();
        for e in ds.graphs.iter().flat_map(|g| &g.edges) {
            assert!((0.1..1.0).contains(&e.features[0]));
            assert_eq!(e.features[1..].iter().sum::<f64>(), 1.0);
        }
    }
}
