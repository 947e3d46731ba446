use super::model::GraphModelParams;
use super::GraphLearnError;
use crate::data::{LabelKind, PoliticalGraph};
use crate::math::{matvec, matvec_t_acc, outer_acc, sigmoid};

/// A graph laid out by node position for the numeric passes.
#[derive(Debug, Clone)]
pub(crate) struct GraphView {
    pub n: usize,
    /// `n x m` node features.
    pub x: Vec<f64>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// `E x p` edge features.
    pub ef: Vec<f64>,
    /// `max(1, indegree)` per node.
    pub deg: Vec<f64>,
}

impl GraphView {
    pub fn new(g: &PoliticalGraph, m: usize, p: usize) -> Result<Self, GraphLearnError> {
        let n = g.nodes.len();
        if n == 0 {
            return Err(GraphLearnError::Shape(format!("graph {} has no nodes", g.graph_id)));
        }
        let mut x = Vec::with_capacity(n * m);
        for node in &g.nodes {
            if node.features.len() != m {
                return Err(GraphLearnError::Shape(format!(
                    "graph {} node {} has {} features, model expects m = {m}",
                    g.graph_id,
                    node.id,
                    node.features.len()
                )));
            }
            x.extend_from_slice(&node.features);
        }
        let index: std::collections::HashMap<u64, usize> =
            g.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut src = Vec::with_capacity(g.edges.len());
        let mut dst = Vec::with_capacity(g.edges.len());
        let mut ef = Vec::with_capacity(g.edges.len() * p);
        let mut indeg = vec![0usize; n];
        for e in &g.edges {
            let (Some(&i), Some(&j)) = (index.get(&e.src), index.get(&e.dst)) else {
                return Err(GraphLearnError::Shape(format!(
                    "graph {} edge ({}, {}) references a missing node",
                    g.graph_id, e.src, e.dst
                )));
            };
            if e.features.len() != p {
                return Err(GraphLearnError::Shape(format!(
                    "graph {} edge ({}, {}) has {} features, model expects p = {p}",
                    g.graph_id,
                    e.src,
                    e.dst,
                    e.features.len()
                )));
            }
            src.push(i);
            dst.push(j);
            ef.extend_from_slice(&e.features);
            indeg[j] += 1;
        }
        let deg = indeg.into_iter().map(|d| d.max(1) as f64).collect();
        Ok(Self { n, x, src, dst, ef, deg })
    }

    pub fn edge_count(&self) -> usize {
        self.src.len()
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct Cache {
    /// `L + 1` node-state matrices, each `n x h`.
    pub states: Vec<Vec<f64>>,
    /// Per layer, `W_nbr h_j` for every node, `n x h`.
    pub msgs: Vec<Vec<f64>>,
    /// Per layer, one gate value per edge.
    pub gates: Vec<Vec<f64>>,
    /// Graph readout `mean_i h_i^L`.
    pub readout: Vec<f64>,
    /// Graph head pre-activations.
    pub graph_logits: Vec<f64>,
    /// Node head pre-activations.
    pub node_logits: Vec<f64>,
}

impl Cache {
    pub fn embeddings(&self) -> &[f64] {
        self.states.last().expect("at least the input state")
    }
}

pub(crate) fn check_params(params: &GraphModelParams, m: usize, p: usize) -> Result<(), GraphLearnError> {
    if params.m != m || params.p != p {
        return Err(GraphLearnError::Shape(format!(
            "model built for (m, p) = ({}, {}), data has ({m}, {p})",
            params.m, params.p
        )));
    }
    Ok(())
}

pub(crate) fn forward_view(params: &GraphModelParams, g: &GraphView) -> Cache {
    let (n, h, m, p) = (g.n, params.hidden, params.m, params.p);
    let mut state = vec![0.0; n * h];
    for i in 0..n {
        let row = &mut state[i * h..(i + 1) * h];
        matvec(&params.w_in, h, m, &g.x[i * m..(i + 1) * m], row);
        for (r, b) in row.iter_mut().zip(&params.b_in) {
            *r += b;
        }
    }
    let mut states = vec![state];
    let mut msgs = Vec::with_capacity(params.layers.len());
    let mut gates = Vec::with_capacity(params.layers.len());

    for layer in &params.layers {
        let cur = states.last().unwrap();
        let mut msg = vec![0.0; n * h];
        for j in 0..n {
            matvec(&layer.w_nbr, h, h, &cur[j * h..(j + 1) * h], &mut msg[j * h..(j + 1) * h]);
        }
        let gate: Vec<f64> = (0..g.edge_count())
            .map(|e| {
                let a = &g.ef[e * p..(e + 1) * p];
                sigmoid(crate::math::dot(&layer.gate_u, a) + layer.gate_c)
            })
            .collect();
        let mut agg = vec![0.0; n * h];
        for e in 0..g.edge_count() {
            let (j, i) = (g.src[e], g.dst[e]);
            let ge = gate[e];
            for k in 0..h {
                agg[i * h + k] += ge * msg[j * h + k];
            }
        }
        let mut next = vec![0.0; n * h];
        for i in 0..n {
            let out = &mut next[i * h..(i + 1) * h];
            matvec(&layer.w_self, h, h, &cur[i * h..(i + 1) * h], out);
            for k in 0..h {
                out[k] = (out[k] + agg[i * h + k] / g.deg[i] + layer.bias[k]).tanh();
            }
        }
        msgs.push(msg);
        gates.push(gate);
        states.push(next);
    }

    let last = states.last().unwrap();
    let mut readout = vec![0.0; h];
    for i in 0..n {
        for k in 0..h {
            readout[k] += last[i * h + k];
        }
    }
    readout.iter_mut().for_each(|v| *v /= n as f64);
    let mut graph_logits = vec![0.0; params.labels()];
    matvec(&params.w_out, params.labels(), h, &readout, &mut graph_logits);
    for (o, b) in graph_logits.iter_mut().zip(&params.b_out) {
        *o += b;
    }
    let node_logits = (0..n)
        .map(|i| crate::math::dot(&params.w_node, &last[i * h..(i + 1) * h]) + params.b_node)
        .collect();

    Cache {
        states,
        msgs,
        gates,
        readout,
        graph_logits,
        node_logits,
    }
}

/// Applies the output activation of each graph-label column.
pub(crate) fn graph_outputs(params: &GraphModelParams, logits: &[f64]) -> Vec<f64> {
    logits
        .iter()
        .zip(&params.label_kinds)
        .map(|(&o, kind)| match kind {
            LabelKind::Binary => sigmoid(o),
            LabelKind::Real => o,
        })
        .collect()
}

/// Bilinear link logit `h_i . B h_j` on final embeddings.
pub(crate) fn link_logit(params: &GraphModelParams, emb: &[f64], i: usize, j: usize) -> f64 {
    let h = params.hidden;
    let (hi, hj) = (&emb[i * h..(i + 1) * h], &emb[j * h..(j + 1) * h]);
    let mut s = 0.0;
    for a in 0..h {
        s += hi[a] * crate::math::dot(&params.bilinear[a * h..(a + 1) * h], hj);
    }
    s
}

/// Upstream derivatives of the loss with respect to the head pre-activations.
#[derive(Debug, Default)]
pub(crate) struct HeadGrads {
    /// Per graph-label column, d loss / d logit.
    pub graph: Option<Vec<f64>>,
    /// Per node, d loss / d node logit.
    pub node: Option<Vec<f64>>,
    /// `(i, j, d loss / d link logit)` by node position.
    pub links: Vec<(usize, usize, f64)>,
}

/// Accumulates exact parameter gradients of one graph into `grads`.
pub(crate) fn backward_view(
    params: &GraphModelParams,
    g: &GraphView,
    cache: &Cache,
    heads: &HeadGrads,
    grads: &mut GraphModelParams,
) {
    let (n, h, m, p) = (g.n, params.hidden, params.m, params.p);
    let big_m = params.labels();
    let last = cache.embeddings();
    let mut dh = vec![0.0; n * h];

    if let Some(dlog) = &heads.graph {
        let mut dz = vec![0.0; h];
        for c in 0..big_m {
            let d = dlog[c];
            grads.b_out[c] += d;
            for k in 0..h {
                grads.w_out[c * h + k] += d * cache.readout[k];
                dz[k] += d * params.w_out[c * h + k];
            }
        }
        for i in 0..n {
            for k in 0..h {
                dh[i * h + k] += dz[k] / n as f64;
            }
        }
    }

    if let Some(dnode) = &heads.node {
        for i in 0..n {
            let d = dnode[i];
            if d == 0.0 {
                continue;
            }
            grads.b_node += d;
            for k in 0..h {
                grads.w_node[k] += d * last[i * h + k];
                dh[i * h + k] += d * params.w_node[k];
            }
        }
    }

    for &(i, j, d) in &heads.links {
        let (hi, hj) = (&last[i * h..(i + 1) * h], &last[j * h..(j + 1) * h]);
        for a in 0..h {
            let row = &params.bilinear[a * h..(a + 1) * h];
            dh[i * h + a] += d * crate::math::dot(row, hj);
            for b in 0..h {
                grads.bilinear[a * h + b] += d * hi[a] * hj[b];
                dh[j * h + b] += d * hi[a] * row[b];
            }
        }
    }

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let out = &cache.states[l + 1];
        let inp = &cache.states[l];
        let msg = &cache.msgs[l];
        let gate = &cache.gates[l];
        let mut dpre = vec![0.0; n * h];
        for idx in 0..n * h {
            dpre[idx] = dh[idx] * (1.0 - out[idx] * out[idx]);
        }
        let mut dprev = vec![0.0; n * h];
        let gl = &mut grads.layers[l];
        for i in 0..n {
            let dp = &dpre[i * h..(i + 1) * h];
            for k in 0..h {
                gl.bias[k] += dp[k];
            }
            outer_acc(&mut gl.w_self, dp, &inp[i * h..(i + 1) * h]);
            matvec_t_acc(&layer.w_self, h, h, dp, &mut dprev[i * h..(i + 1) * h]);
        }
        let mut dmsg = vec![0.0; n * h];
        for e in 0..g.edge_count() {
            let (j, i) = (g.src[e], g.dst[e]);
            let ge = gate[e];
            let mut dgate = 0.0;
            for k in 0..h {
                let dagg = dpre[i * h + k] / g.deg[i];
                dmsg[j * h + k] += ge * dagg;
                dgate += dagg * msg[j * h + k];
            }
            let dz = dgate * ge * (1.0 - ge);
            for f in 0..p {
                gl.gate_u[f] += dz * g.ef[e * p + f];
            }
            gl.gate_c += dz;
        }
        for j in 0..n {
            let dm = &dmsg[j * h..(j + 1) * h];
            outer_acc(&mut gl.w_nbr, dm, &inp[j * h..(j + 1) * h]);
            matvec_t_acc(&layer.w_nbr, h, h, dm, &mut dprev[j * h..(j + 1) * h]);
        }
        dh = dprev;
    }

    for i in 0..n {
        let d = &dh[i * h..(i + 1) * h];
        for k in 0..h {
            grads.b_in[k] += d[k];
        }
        outer_acc(&mut grads.w_in, d, &g.x[i * m..(i + 1) * m]);
    }
}

/// Outputs of a forward pass over one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphForward {
    /// Per graph-label column: probability for binary columns, value for real ones.
    pub graph: Vec<f64>,
    /// Node-head probability per node, in node order.
    pub node_probs: Vec<f64>,
    /// Final node embeddings, `n x h` row-major.
    pub embeddings: Vec<f64>,
}

/// Runs the message-passing network on `g`. The graph is not modified.
pub fn forward_graph(params: &GraphModelParams, g: &PoliticalGraph) -> Result<GraphForward, GraphLearnError> {
    let view = GraphView::new(g, params.m, params.p)?;
    Ok(forward_from_view(params, &view))
}

pub(crate) fn forward_from_view(params: &GraphModelParams, view: &GraphView) -> GraphForward {
    let cache = forward_view(params, view);
    GraphForward {
        graph: graph_outputs(params, &cache.graph_logits),
        node_probs: cache.node_logits.iter().map(|&s| sigmoid(s)).collect(),
        embeddings: cache.embeddings().to_vec(),
    }
}

/// Probability of a directed edge `i -> j` (node ids) from the bilinear head.
pub fn score_link(params: &GraphModelParams, g: &PoliticalGraph, i: u64, j: u64) -> Result<f64, GraphLearnError> {
    if i == j {
        return Err(GraphLearnError::Argument(format!("cannot score self-pair ({i}, {i})")));
    }
    let (Some(a), Some(b)) = (g.index_of(i), g.index_of(j)) else {
        return Err(GraphLearnError::Argument(format!("node pair ({i}, {j}) not in graph {}", g.graph_id)));
    };
    let fwd = forward_graph(params, g)?;
    Ok(sigmoid(link_logit(params, &fwd.embeddings, a, b)))
}
