#![allow(dead_code)]

pub mod oracles;

use polilab::data::{Edge, GraphDims, LabelKind, Node, NodeKind, PoliticalGraph};
use polilab::graphlearn::LinkPair;
use polilab::rng::stream_rng;
use rand::Rng;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and central differences of `f`
/// around `x` with step `h`.
pub fn max_fd_error(x: &[f64], analytic: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// A small random graph batch: 1-3 graphs of 2-5 nodes, labels of kinds
/// `[Binary, Real]`, some node labels missing.
pub struct MicroGraphs {
    pub dims: GraphDims,
    pub graphs: Vec<PoliticalGraph>,
    pub pairs: Vec<LinkPair>,
    pub layers: usize,
    pub hidden: usize,
}

pub fn micro_graphs(seed: u64) -> MicroGraphs {
    let mut rng = stream_rng(seed, 0);
    let m = rng.random_range(1..=3);
    let p = rng.random_range(1..=2);
    let dims = GraphDims::new(m, p, vec![LabelKind::Binary, LabelKind::Real]);
    let layers = rng.random_range(0..=2);
    let hidden = rng.random_range(1..=3);
    let mut graphs = Vec::new();
    let mut pairs = Vec::new();
    for k in 0..rng.random_range(1..=3usize) {
        let n = rng.random_range(2..=5usize);
        let nodes: Vec<Node> = (0..n as u64)
            .map(|id| Node { id, kind: NodeKind::Legislator, features: (0..m).map(|_| rng.random_range(-1.0..1.0)).collect() })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n as u64 {
            for j in 0..n as u64 {
                if i != j && rng.random_bool(0.4) {
                    edges.push(Edge { src: i, dst: j, features: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect() });
                }
            }
        }
        let node_labels = (0..n)
            .map(|i| if i == 0 || rng.random_bool(0.7) { Some(f64::from(u8::from(rng.random_bool(0.5)))) } else { None })
            .collect();
        for _ in 0..3 {
            let src = rng.random_range(0..n);
            let dst = (src + rng.random_range(1..n)) % n;
            pairs.push(LinkPair { graph: k, src, dst, label: rng.random_bool(0.5) });
        }
        graphs.push(PoliticalGraph {
            graph_id: k as u64,
            nodes,
            edges,
            label: vec![f64::from(u8::from(rng.random_bool(0.5))), rng.random_range(-1.0..1.0)],
            node_labels: Some(node_labels),
        });
    }
    MicroGraphs { dims, graphs, pairs, layers, hidden }
}

/// A small random sequence batch: 1-3 sequences of 1-5 steps with
/// `d, h <= 3`, `q <= 2`, some outcomes missing.
pub struct MicroSequences {
    pub seqs: Vec<polilab::data::EventSequence>,
    pub d: usize,
    pub q: usize,
    pub hidden: usize,
    pub binary_y: bool,
}

pub fn micro_sequences(seed: u64) -> MicroSequences {
    use polilab::data::{Event, EventSequence};
    let mut rng = stream_rng(seed, 1);
    let d = rng.random_range(1..=3);
    let q = rng.random_range(1..=2);
    let hidden = rng.random_range(1..=3);
    let binary_y = rng.random_bool(0.5);
    let binary_x = rng.random_bool(0.7);
    let mut seqs = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let mut s = EventSequence::new(d, q, binary_x);
        for t in 0..rng.random_range(1..=5) {
            let x = (0..d)
                .map(|_| if binary_x { f64::from(u8::from(rng.random_bool(0.5))) } else { rng.random_range(-1.0..1.0) })
                .collect();
            let y = (t == 0 || rng.random_bool(0.7)).then(|| {
                (0..q).map(|_| if binary_y { rng.random_range(0.0..1.0) } else { rng.random_range(-1.0..1.0) }).collect()
            });
            s.events.push(Event { t: t as f64, x, y, generated: false });
        }
        seqs.push(s);
    }
    MicroSequences { seqs, d, q, hidden, binary_y }
}
