mod common;

use common::{max_fd_error, micro_graphs};
use polilab::data::FlatParams;
use polilab::graphlearn::{
    extract_substructure, forward_graph, init_model, loss_and_gradients, Batch, GraphModelParams, Task,
};
use polilab::synthgen::{gen_graph_dataset, GraphGenConfig};

fn gradient_error(seed: u64, task: Task) -> f64 {
    let inst = micro_graphs(seed);
    let params = init_model(&inst.dims, inst.layers, inst.hidden, seed);
    let batch = Batch { graphs: &inst.graphs, task, pairs: &inst.pairs };
    let (_, grads) = loss_and_gradients(&params, &batch).unwrap();
    let x = params.to_flat();
    let mut probe = params.clone();
    max_fd_error(&x, &grads.to_flat(), 1e-5, |flat| {
        probe.set_flat(flat);
        loss_and_gradients(&probe, &batch).unwrap().0
    })
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for task in [Task::GraphLabel, Task::NodeLabel, Task::Link] {
        for seed in 0..20 {
            let err = gradient_error(seed, task);
            assert!(err < 1e-4, "{task:?} seed {seed}: relative error {err}");
        }
    }
}

fn target_probability(params: &GraphModelParams, g: &polilab::data::PoliticalGraph, keep: &[(u64, u64)], class: u8) -> f64 {
    let mut h = g.clone();
    h.edges.retain(|e| keep.contains(&(e.src, e.dst)));
    let p = forward_graph(params, &h).unwrap().graph[0];
    if class == 1 { p } else { 1.0 - p }
}

#[test]
fn greedy_substructure_is_at_most_the_exhaustive_best() {
    for seed in 0..10 {
        let ds = gen_graph_dataset(&GraphGenConfig { n: 5, k: 1, q_in: 0.4, q_out: 0.2, ..Default::default() }, seed).unwrap();
        let g = &ds.graphs[0];
        if g.edges.len() < 2 || g.edges.len() > 6 {
            continue;
        }
        let params = init_model(&ds.dims, 2, 4, seed + 100);
        let found = extract_substructure(&params, g, 0, 2).unwrap();
        let all: Vec<(u64, u64)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
        let mut best = f64::NEG_INFINITY;
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                best = best.max(target_probability(&params, g, &[all[a], all[b]], found.target_class));
            }
        }
        let recomputed = target_probability(&params, g, &found.edges, found.target_class);
        assert_eq!(found.edges.len(), 2);
        assert_eq!(recomputed, found.probability);
        assert!(found.probability <= best);
    }
}
