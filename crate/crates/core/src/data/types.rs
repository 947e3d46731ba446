use serde::{Deserialize, Serialize};

/// Role of an actor or entity in a political graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Legislator,
    Lobbyist,
    Constituent,
    Committee,
    Bill,
    Issue,
    Agency,
    Other(String),
}

pub const MAX_OTHER_LABEL_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    pub kind: NodeKind,
    pub features: Vec<f64>,
}

/// Directed edge `src -> dst`. Presence of the record is the presence bit of the
/// adjacency tensor slot; a present edge may still carry all-zero features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: u64,
    pub dst: u64,
    pub features: Vec<f64>,
}

/// How a graph label column is interpreted by learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    /// 0/1 target, predicted through a sigmoid and scored with cross-entropy.
    Binary,
    /// Real target, predicted by the identity and scored with squared error.
    Real,
}

/// Feature dimensionalities shared by every graph of a dataset: node features
/// `m`, edge features `p` and one label kind per graph-label column (`M` total).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDims {
    pub m: usize,
    pub p: usize,
    pub label_kinds: Vec<LabelKind>,
}

impl GraphDims {
    pub fn new(m: usize, p: usize, label_kinds: Vec<LabelKind>) -> Self {
        Self { m, p, label_kinds }
    }

    /// Number of graph-label columns.
    pub fn labels(&self) -> usize {
        self.label_kinds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoliticalGraph {
    pub graph_id: u64,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub label: Vec<f64>,
    /// Per-node target aligned with `nodes`; `None` entries are unlabeled
    /// (e.g. abstentions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<Option<f64>>>,
}

impl PoliticalGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Position of the node with the given id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn has_edge(&self, src: u64, dst: u64) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst)
    }

    /// Materializes the dense adjacency tensor `A[n, n, p]` (row-major, slot
    /// `(i, j)` at `(i * n + j) * p`) together with the presence mask `n * n`,
    /// indexed by node position.
    pub fn dense_adjacency(&self, p: usize) -> (Vec<f64>, Vec<bool>) {
        let n = self.nodes.len();
        let mut tensor = vec![0.0; n * n * p];
        let mut present = vec![false; n * n];
        for e in &self.edges {
            let (Some(i), Some(j)) = (self.index_of(e.src), self.index_of(e.dst)) else {
                continue;
            };
            present[i * n + j] = true;
            let base = (i * n + j) * p;
            for (k, v) in e.features.iter().take(p).enumerate() {
                tensor[base + k] = *v;
            }
        }
        (tensor, present)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub dims: GraphDims,
    pub graphs: Vec<PoliticalGraph>,
    /// Generator hidden variables. Learners never read this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<serde_json::Value>,
}

impl GraphDataset {
    pub fn new(dims: GraphDims) -> Self {
        Self {
            dims,
            graphs: Vec::new(),
            ground_truth: None,
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Same dims and sidecar, a different selection of graphs.
    pub fn with_graphs(&self, graphs: Vec<PoliticalGraph>) -> Self {
        Self {
            dims: self.dims.clone(),
            graphs,
            ground_truth: self.ground_truth.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Set on events produced by sequence generation rather than observed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub generated: bool,
}

impl Event {
    pub fn new(t: f64, x: Vec<f64>, y: Option<Vec<f64>>) -> Self {
        Self {
            t,
            x,
            y,
            generated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub d: usize,
    pub q: usize,
    pub binary_x: bool,
    pub events: Vec<Event>,
}

impl EventSequence {
    pub fn new(d: usize, q: usize, binary_x: bool) -> Self {
        Self {
            d,
            q,
            binary_x,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Checks the sequence invariants, returning one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut prev: Option<f64> = None;
        for (k, e) in self.events.iter().enumerate() {
            if !e.t.is_finite() || e.t < 0.0 {
                out.push(format!("event {k}: timestamp {} is not a non-negative finite value", e.t));
            }
            if let Some(p) = prev {
                if e.t <= p {
                    out.push(format!("event {k}: timestamp {} does not increase past {p}", e.t));
                }
            }
            prev = Some(e.t);
            if e.x.len() != self.d {
                out.push(format!("event {k}: x has length {}, expected d = {}", e.x.len(), self.d));
            }
            if e.x.iter().any(|v| !v.is_finite()) {
                out.push(format!("event {k}: x contains a non-finite value"));
            }
            if self.binary_x && e.x.iter().any(|&v| v != 0.0 && v != 1.0) {
                out.push(format!("event {k}: x is declared binary but holds a value other than 0 or 1"));
            }
            if let Some(y) = &e.y {
                if y.len() != self.q {
                    out.push(format!("event {k}: y has length {}, expected q = {}", y.len(), self.q));
                }
                if y.iter().any(|v| !v.is_finite()) {
                    out.push(format!("event {k}: y contains a non-finite value"));
                }
            }
        }
        out
    }
}

/// A collection of sequences persisted together, with an optional generator sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub sequences: Vec<EventSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<serde_json::Value>,
}

/// Node-marked event stream on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointProcess {
    pub horizon: f64,
    pub n: usize,
    pub events: Vec<(f64, usize)>,
}

impl MarkedPointProcess {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            out.push(format!("horizon {} must be positive and finite", self.horizon));
        }
        let mut prev = 0.0;
        for (k, &(t, u)) in self.events.iter().enumerate() {
            if !(t > prev) || t > self.horizon {
                out.push(format!("event {k}: timestamp {t} out of order or outside (0, T]"));
            }
            if u >= self.n {
                out.push(format!("event {k}: node {u} out of range for n = {}", self.n));
            }
            prev = t;
        }
        out
    }

    /// Events per node.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n];
        for &(_, u) in &self.events {
            if u < self.n {
                c[u] += 1;
            }
        }
        c
    }
}
