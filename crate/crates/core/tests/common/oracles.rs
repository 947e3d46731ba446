//! Brute-force enumerations checked against the intervention searches.
//! Each `check_*` builds one seeded instance and returns a description of
//! the first disagreement.

use polilab::data::{Edge, Event, EventSequence, PoliticalGraph};
use polilab::graphlearn::{forward_graph, init_model, GraphModelParams};
use polilab::intervene::{
    defend_minimax, nominate_jurisdiction, optimize_action_sequence, portfolio_select, rank_edge_additions,
    EdgeCandidate, Opportunity,
};
use polilab::rng::stream_rng;
use polilab::seqlearn::{forward_rnn, init_rnn, RnnParams};
use polilab::synthgen::{gen_graph_dataset, GraphGenConfig};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<(), String>;

fn prob(params: &GraphModelParams, g: &PoliticalGraph, outcome: usize) -> f64 {
    forward_graph(params, g).unwrap().graph[outcome]
}

fn plus(g: &PoliticalGraph, c: &EdgeCandidate) -> PoliticalGraph {
    let mut h = g.clone();
    h.edges.push(Edge { src: c.src, dst: c.dst, features: c.features.clone() });
    h
}

fn minus(g: &PoliticalGraph, (s, d): (u64, u64)) -> PoliticalGraph {
    let mut h = g.clone();
    h.edges.retain(|e| (e.src, e.dst) != (s, d));
    h
}

/// A seeded synthetic graph with an untrained model of random depth and width.
fn graph_instance(seed: u64, rng: &mut impl Rng) -> (GraphModelParams, PoliticalGraph) {
    let n = rng.random_range(5..=8);
    let ds = gen_graph_dataset(&GraphGenConfig { n, k: 1, ..Default::default() }, seed).unwrap();
    let params = init_model(&ds.dims, rng.random_range(0..=2), rng.random_range(2..=5), seed);
    (params, ds.graphs[0].clone())
}

fn absent(g: &PoliticalGraph, limit: usize, rng: &mut impl Rng) -> Vec<EdgeCandidate> {
    let mut out = Vec::new();
    for a in &g.nodes {
        for b in &g.nodes {
            if a.id != b.id && !g.has_edge(a.id, b.id) {
                let features = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
                out.push(EdgeCandidate { src: a.id, dst: b.id, features });
            }
        }
    }
    out.shuffle(rng);
    out.truncate(limit);
    out
}

/// Index of the first maximum.
fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(k);
        }
    }
    best
}

pub fn check_edge_ranking(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 100);
    let (params, g) = graph_instance(seed, &mut rng);
    let count = rng.random_range(1..=20);
    let cands = absent(&g, count, &mut rng);
    let outcome = rng.random_range(0..2);
    let rep = rank_edge_additions(&params, &g, &cands, outcome).map_err(|e| e.to_string())?;
    let base = prob(&params, &g, outcome);
    let scores: Vec<f64> = cands.iter().map(|c| prob(&params, &plus(&g, c), outcome)).collect();
    if rep.baseline != base {
        return Err(format!("seed {seed}: baseline {} vs {base}", rep.baseline));
    }
    let top = first_argmax(&scores).unwrap();
    if rep.items[0].index != top || rep.items[0].score != scores[top] {
        return Err(format!("seed {seed}: top-1 is candidate {} but exhaustive argmax is {top}", rep.items[0].index));
    }
    let mut seen: Vec<usize> = rep.items.iter().map(|i| i.index).collect();
    seen.sort_unstable();
    if seen != (0..cands.len()).collect::<Vec<_>>() {
        return Err(format!("seed {seed}: ranking is not a permutation of the candidates"));
    }
    for it in &rep.items {
        if it.score != scores[it.index] || it.delta != scores[it.index] - base {
            return Err(format!("seed {seed}: candidate {} rescored differently", it.index));
        }
    }
    Ok(())
}

pub fn check_nomination(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 101);
    let n = rng.random_range(4..=7);
    let ds = gen_graph_dataset(&GraphGenConfig { n, k: 50, ..Default::default() }, seed).unwrap();
    let params = init_model(&ds.dims, rng.random_range(0..=2), rng.random_range(2..=5), seed);
    let outcome = rng.random_range(0..2);
    let rep = nominate_jurisdiction(&params, &ds, outcome).map_err(|e| e.to_string())?;
    let mut best: Option<(u64, f64)> = None;
    for g in &ds.graphs {
        let p = prob(&params, g, outcome);
        let better = match best {
            None => true,
            Some((id, bp)) => p > bp || (p == bp && g.graph_id < id),
        };
        if better {
            best = Some((g.graph_id, p));
        }
    }
    let (id, p) = best.unwrap();
    if rep.items[0].action != format!("graph {id}") || rep.items[0].score != p {
        return Err(format!("seed {seed}: nominated {} but the scan finds graph {id}", rep.items[0].action));
    }
    Ok(())
}

fn extend(prefix: &EventSequence, actions: &[Vec<f64>]) -> EventSequence {
    let mut s = prefix.clone();
    let mut t = s.events.last().map_or(0.0, |e| e.t + 1.0);
    for a in actions {
        s.events.push(Event::new(t, a.clone(), None));
        t += 1.0;
    }
    s
}

/// Outcome column 0 after feeding `prefix` then `actions`, by a fresh
/// forward pass over the extended sequence.
fn terminal_outcome(params: &RnnParams, prefix: &EventSequence, actions: &[Vec<f64>]) -> f64 {
    forward_rnn(params, &extend(prefix, actions)).unwrap().y_hat.last().unwrap()[0]
}

pub fn check_beam(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 102);
    let d = rng.random_range(1..=4);
    let hidden = rng.random_range(1..=4);
    let mut params = init_rnn(d, 1, hidden, rng.random_bool(0.5), seed);
    if seed % 10 == 0 {
        // constant outcome head: every sequence ties
        params.w_y.iter_mut().for_each(|w| *w = 0.0);
    }
    let mut prefix = EventSequence::new(d, 1, true);
    for t in 0..rng.random_range(0..=4) {
        let x = (0..d).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect();
        prefix.events.push(Event::new(t as f64, x, None));
    }
    let width = rng.random_range(1..=3usize);
    let actions: Vec<Vec<f64>> =
        (0..width).map(|_| (0..d).map(|_| f64::from(u8::from(rng.random_bool(0.5)))).collect()).collect();
    let horizon = rng.random_range(1..=3u32);
    let beam = width.pow(horizon);
    let plan = optimize_action_sequence(&params, &prefix, horizon as usize, beam, &actions).map_err(|e| e.to_string())?;

    // lexicographic enumeration; strict improvement keeps the first of equals
    let mut best: Option<(Vec<usize>, f64)> = None;
    for code in 0..beam {
        let mut idx = Vec::with_capacity(horizon as usize);
        let mut c = code;
        for _ in 0..horizon {
            idx.push(c % width);
            c /= width;
        }
        idx.reverse();
        let seq: Vec<Vec<f64>> = idx.iter().map(|&i| actions[i].clone()).collect();
        let y = terminal_outcome(&params, &prefix, &seq);
        if best.as_ref().is_none_or(|(_, by)| y > *by) {
            best = Some((idx, y));
        }
    }
    let (idx, y) = best.unwrap();
    if plan.actions != idx || plan.outcome != y {
        return Err(format!("seed {seed}: beam {:?} ({}) vs exhaustive {idx:?} ({y})", plan.actions, plan.outcome));
    }
    Ok(())
}

pub fn check_portfolio(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 103);
    let n = rng.random_range(0..=15usize);
    let mut ids: Vec<u64> = (0..100).collect();
    ids.shuffle(&mut rng);
    let coarse = rng.random_bool(0.3);
    let opps: Vec<Opportunity> = ids[..n]
        .iter()
        .map(|&id| Opportunity {
            id,
            success_prob: if coarse { f64::from(rng.random_range(0..=4u8)) / 4.0 } else { rng.random_range(0.0..=1.0) },
            cost: f64::from(rng.random_range(1..=6u8)),
        })
        .collect();
    let budget = rng.random_range(0..=25u64);
    let got = portfolio_select(&opps, budget).map_err(|e| e.to_string())?;

    let mut sorted = opps.clone();
    sorted.sort_by_key(|o| o.id);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let (mut cost, mut value) = (0.0, 0.0);
        for (k, o) in sorted.iter().enumerate() {
            if mask & (1 << k) != 0 {
                cost += o.cost;
                value += o.success_prob;
            }
        }
        if cost <= budget as f64 && value > best {
            best = value;
        }
    }
    let chosen: Vec<&Opportunity> = sorted.iter().filter(|o| got.ids.contains(&o.id)).collect();
    let cost: f64 = chosen.iter().map(|o| o.cost).sum();
    let value: f64 = chosen.iter().map(|o| o.success_prob).sum();
    if got.value != best || value != got.value || cost != got.cost as f64 || got.cost > budget {
        return Err(format!("seed {seed}: DP value {} (cost {}) vs exhaustive {best}", got.value, got.cost));
    }
    Ok(())
}

pub fn check_defense(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 104);
    let (params, g) = graph_instance(seed, &mut rng);
    let mut removals: Vec<(u64, u64)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
    removals.shuffle(&mut rng);
    removals.truncate(rng.random_range(0..=10));
    let count = rng.random_range(0..=10);
    let additions = absent(&g, count, &mut rng);
    let outcome = rng.random_range(0..2);
    let got = defend_minimax(&params, &g, &removals, &additions, outcome).map_err(|e| e.to_string())?;

    let attacker = |h: &PoliticalGraph| {
        let base = prob(&params, h, outcome);
        additions.iter().map(|c| prob(&params, &plus(h, c), outcome) - base).fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
    };
    let baseline = attacker(&g).unwrap_or(0.0);
    let values: Vec<f64> = removals.iter().map(|&r| attacker(&minus(&g, r)).unwrap_or(0.0)).collect();
    let mut choice: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if choice.is_none_or(|c| v < values[c]) {
            choice = Some(k);
        }
    }
    if got.baseline != baseline || got.values != values || got.choice != choice {
        return Err(format!(
            "seed {seed}: minimax ({}, {:?}, {:?}) vs double loop ({baseline}, {values:?}, {choice:?})",
            got.baseline, got.values, got.choice
        ));
    }
    Ok(())
}
