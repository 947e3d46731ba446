use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FeaturizeError;
use crate::data::{EventSequence, GraphDataset, SequenceSet};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    ByGraphRandom,
    ByTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPolicy {
    pub kind: SplitKind,
    /// `(train, val, test)`, positive and summing to 1.
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitPolicy {
    fn validate(&self) -> Result<(), FeaturizeError> {
        let [a, b, c] = self.fractions;
        if [a, b, c].iter().any(|f| !(f.is_finite() && *f > 0.0)) || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(FeaturizeError::Split(format!("fractions {:?} must be positive and sum to 1", self.fractions)));
        }
        Ok(())
    }

    /// `(round(f_train * n), round(f_val * n), rest)`; every part must be non-empty.
    fn sizes(&self, n: usize) -> Result<[usize; 3], FeaturizeError> {
        let train = (self.fractions[0] * n as f64).round() as usize;
        let val = (self.fractions[1] * n as f64).round() as usize;
        let test = n.checked_sub(train + val).unwrap_or(0);
        if train == 0 || val == 0 || test == 0 || train + val + test != n {
            return Err(FeaturizeError::Split(format!(
                "fractions {:?} of {n} items leave a split empty",
                self.fractions
            )));
        }
        Ok([train, val, test])
    }

    /// Item order for the partition: shuffled on stream 0 of the seed, or
    /// ascending by the given key for `by_time`.
    fn order(&self, n: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        match self.kind {
            SplitKind::ByGraphRandom => idx.shuffle(&mut stream_rng(self.seed, 0)),
            SplitKind::ByTime => idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b))),
        }
        idx
    }
}

fn partition(order: &[usize], sizes: [usize; 3]) -> [Vec<usize>; 3] {
    let mut parts = [
        order[..sizes[0]].to_vec(),
        order[sizes[0]..sizes[0] + sizes[1]].to_vec(),
        order[sizes[0] + sizes[1]..].to_vec(),
    ];
    parts.iter_mut().for_each(|p| p.sort_unstable());
    parts
}

/// Splits graphs into `(train, val, test)`. `by_graph_random` shuffles;
/// `by_time` orders by graph id, treating ids as chronological. Each part
/// keeps the original relative order of its graphs.
pub fn split_dataset(ds: &GraphDataset, policy: &SplitPolicy) -> Result<[GraphDataset; 3], FeaturizeError> {
    policy.validate()?;
    if ds.is_empty() {
        return Err(FeaturizeError::EmptyInput("dataset has no graphs".into()));
    }
    let sizes = policy.sizes(ds.len())?;
    let order = policy.order(ds.len(), |k| ds.graphs[k].graph_id as f64);
    let parts = partition(&order, sizes);
    Ok(parts.map(|idx| ds.with_graphs(idx.iter().map(|&k| ds.graphs[k].clone()).collect())))
}

fn subset(set: &SequenceSet, seqs: Vec<EventSequence>) -> SequenceSet {
    SequenceSet { sequences: seqs, ground_truth: set.ground_truth.clone() }
}

/// Splits sequences into `(train, val, test)`.
///
/// `by_graph_random` assigns whole sequences at random. `by_time` pools every
/// event timestamp, takes the cut points `t_val = ts[n_train]` and
/// `t_test = ts[n_train + n_val]` of the sorted pool, and cuts each sequence
/// into `t < t_val`, `t_val <= t < t_test` and `t >= t_test`, dropping empty
/// pieces. Either way each part must end up non-empty.
pub fn split_sequences(set: &SequenceSet, policy: &SplitPolicy) -> Result<[SequenceSet; 3], FeaturizeError> {
    policy.validate()?;
    match policy.kind {
        SplitKind::ByGraphRandom => {
            if set.sequences.is_empty() {
                return Err(FeaturizeError::EmptyInput("no sequences".into()));
            }
            let sizes = policy.sizes(set.sequences.len())?;
            let parts = partition(&policy.order(set.sequences.len(), |_| 0.0), sizes);
            Ok(parts.map(|idx| subset(set, idx.iter().map(|&k| set.sequences[k].clone()).collect())))
        }
        SplitKind::ByTime => {
            let mut ts: Vec<f64> = set.sequences.iter().flat_map(|s| s.events.iter().map(|e| e.t)).collect();
            if ts.is_empty() {
                return Err(FeaturizeError::EmptyInput("no events".into()));
            }
            ts.sort_by(f64::total_cmp);
            let sizes = policy.sizes(ts.len())?;
            let (t_val, t_test) = (ts[sizes[0]], ts[sizes[0] + sizes[1]]);
            let mut parts: [Vec<EventSequence>; 3] = Default::default();
            for s in &set.sequences {
                for (k, part) in parts.iter_mut().enumerate() {
                    let keep = |t: f64| match k {
                        0 => t < t_val,
                        1 => t >= t_val && t < t_test,
                        _ => t >= t_test,
                    };
                    let mut piece = EventSequence::new(s.d, s.q, s.binary_x);
                    piece.events = s.events.iter().filter(|e| keep(e.t)).cloned().collect();
                    if !piece.is_empty() {
                        part.push(piece);
                    }
                }
            }
            if parts.iter().any(Vec::is_empty) {
                return Err(FeaturizeError::Split("tied timestamps leave a time split empty".into()));
            }
            Ok(parts.map(|p| subset(set, p)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{gen_graph_dataset, gen_sequences, GraphGenConfig, SeqGenConfig};

    fn policy(kind: SplitKind, fractions: [f64; 3], seed: u64) -> SplitPolicy {
        SplitPolicy { kind, fractions, seed }
    }

    #[test]
    fn ten_graphs_split_eight_one_one() {
        let ds = gen_graph_dataset(&GraphGenConfig { n: 5, k: 10, ..Default::default() }, 0).unwrap();
        let p = policy(SplitKind::ByGraphRandom, [0.8, 0.1, 0.1], 1);
        let parts = split_dataset(&ds, &p).unwrap();
        assert_eq!(parts.iter().map(GraphDataset::len).collect::<Vec<_>>(), vec![8, 1, 1]);
        let mut ids: Vec<u64> = parts.iter().flat_map(|d| d.graphs.iter().map(|g| g.graph_id)).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
        assert_eq!(split_dataset(&ds, &p).unwrap(), parts);
    }

    #[test]
    fn time_split_on_graphs_is_chronological() {
        let ds = gen_graph_dataset(&GraphGenConfig { n: 5, k: 10, ..Default::default() }, 0).unwrap();
        let [tr, va, te] = split_dataset(&ds, &policy(SplitKind::ByTime, [0.6, 0.2, 0.2], 0)).unwrap();
        assert_eq!(tr.graphs.last().unwrap().graph_id, 5);
        assert_eq!(va.graphs[0].graph_id, 6);
        assert_eq!(te.graphs[0].graph_id, 8);
    }

    #[test]
    fn time_split_on_sequences_has_no_leakage() {
        let set = gen_sequences(&SeqGenConfig { steps: 20, ..Default::default() }, 4, 3).unwrap();
        let [tr, va, te] = split_sequences(&set, &policy(SplitKind::ByTime, [0.6, 0.2, 0.2], 0)).unwrap();
        let times = |s: &SequenceSet| s.sequences.iter().flat_map(|q| q.events.iter().map(|e| e.t)).collect::<Vec<_>>();
        let max_train = times(&tr).into_iter().fold(f64::MIN, f64::max);
        let min_val = times(&va).into_iter().fold(f64::MAX, f64::min);
        let min_test = times(&te).into_iter().fold(f64::MAX, f64::min);
        assert!(max_train < min_val && max_train < min_test);
        let total: usize = [&tr, &va, &te].iter().map(|s| times(s).len()).sum();
        assert_eq!(total, 80);
    }

    #[test]
    fn random_sequence_split_is_exhaustive() {
        let set = gen_sequences(&SeqGenConfig { steps: 3, ..Default::default() }, 10, 3).unwrap();
        let parts = split_sequences(&set, &policy(SplitKind::ByGraphRandom, [0.5, 0.3, 0.2], 9)).unwrap();
        assert_eq!(parts.iter().map(|p| p.sequences.len()).collect::<Vec<_>>(), vec![5, 3, 2]);
    }

    #[test]
    fn empty_splits_and_bad_fractions_are_errors() {
        let ds = gen_graph_dataset(&GraphGenConfig { n: 5, k: 3, ..Default::default() }, 0).unwrap();
        assert!(matches!(
            split_dataset(&ds, &policy(SplitKind::ByGraphRandom, [0.9, 0.05, 0.05], 0)),
            Err(FeaturizeError::Split(_))
        ));
        assert!(split_dataset(&ds, &policy(SplitKind::ByGraphRandom, [0.5, 0.5, 0.5], 0)).is_err());
        assert!(split_dataset(&ds.with_graphs(vec![]), &policy(SplitKind::ByTime, [0.4, 0.3, 0.3], 0)).is_err());
    }
}
