use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::records::{RecordBundle, VoteChoice};
use super::FeaturizeError;
use crate::data::{Edge, Event, EventSequence, GraphDataset, GraphDims, LabelKind, Node, NodeKind, PoliticalGraph};

/// Maps graph ids back to bill ids; stored as the dataset sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillIndex {
    /// `bill_ids[k]` is the bill behind graph `k`.
    pub bill_ids: Vec<String>,
}

impl BillIndex {
    pub fn from_dataset(ds: &GraphDataset) -> Option<Self> {
        serde_json::from_value(ds.ground_truth.clone()?).ok()
    }
}

/// Party encoding: sorted distinct party names, the first maps to +1, the
/// second to -1, any further party to 0.
pub fn party_codes(parties: impl IntoIterator<Item = String>) -> HashMap<String, f64> {
    let names: BTreeSet<String> = parties.into_iter().collect();
    names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let code = match k {
                0 => 1.0,
                1 => -1.0,
                _ => 0.0,
            };
            (name, code)
        })
        .collect()
}

/// First 8 bytes of SHA-256 of the UTF-8 name, big-endian, top 53 bits
/// divided by 2^53: a stable value in [0, 1).
pub fn district_hash(district: &str) -> f64 {
    let digest = Sha256::digest(district.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    (u64::from_be_bytes(head) >> 11) as f64 / (1u64 << 53) as f64
}

/// Edge feature columns of built graphs.
const SHARED_COMMITTEES: usize = 0;
const COSPONSORSHIP: usize = 1;
const CHAIR_LINK: usize = 2;

/// One graph per bill, graph ids in sorted bill-id order.
///
/// Every member is a node of every bill graph, ordered by member id. Members
/// sharing a committee are joined in both directions; edge features are
/// `[shared committees / max over pairs, co-sponsorships of the pair on other
/// bills / max over this graph's edges, 1 if either chairs a shared committee,
/// 0]`. Node features are `[party code, district hash, seniority / max
/// |seniority|, yes / (yes + no) over the member's votes on other bills (0.5
/// without any)]`. Node labels are the vote on this bill (yes 1, no 0,
/// abstain or absent unlabeled). Graph labels are `[yes share > 0.5, yes
/// share]` with yes share `yes / (yes + no)`, 0 when nobody voted yes or no.
pub fn build_graphs_from_records(r: &RecordBundle) -> Result<GraphDataset, FeaturizeError> {
    r.validate()?;
    let mut members: Vec<usize> = (0..r.members.len()).collect();
    members.sort_by_key(|&k| r.members[k].member_id);
    let n = members.len();
    let pos: HashMap<u64, usize> = members.iter().enumerate().map(|(p, &k)| (r.members[k].member_id, p)).collect();

    let bills: Vec<String> = r
        .votes
        .iter()
        .map(|v| v.bill_id.clone())
        .chain(r.sponsorships.iter().map(|s| s.bill_id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let bill_pos: HashMap<&str, usize> = bills.iter().enumerate().map(|(k, b)| (b.as_str(), k)).collect();

    // committee structure, identical for every bill
    let mut shared = vec![0usize; n * n];
    let mut chair = vec![false; n * n];
    for c in &r.committees {
        let ps: BTreeSet<usize> = c.member_ids.iter().map(|id| pos[id]).collect();
        for &i in &ps {
            for &j in &ps {
                if i != j {
                    shared[i * n + j] += 1;
                    if c.chair_id.is_some_and(|ch| pos[&ch] == i || pos[&ch] == j) {
                        chair[i * n + j] = true;
                    }
                }
            }
        }
    }
    let max_shared = shared.iter().copied().max().unwrap_or(0).max(1) as f64;

    // sponsor sets per bill and pooled pair counts
    let mut sponsors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); bills.len()];
    for s in &r.sponsorships {
        let set = &mut sponsors[bill_pos[s.bill_id.as_str()]];
        set.insert(pos[&s.sponsor_id]);
        set.extend(s.cosponsor_ids.iter().map(|id| pos[id]));
    }
    let mut cospons = vec![0usize; n * n];
    for set in &sponsors {
        for &i in set {
            for &j in set {
                if i != j {
                    cospons[i * n + j] += 1;
                }
            }
        }
    }

    // votes[bill][member]
    let mut votes: Vec<Vec<Option<VoteChoice>>> = vec![vec![None; n]; bills.len()];
    let mut yes_total = vec![0usize; n];
    let mut cast_total = vec![0usize; n];
    for v in &r.votes {
        let i = pos[&v.member_id];
        votes[bill_pos[v.bill_id.as_str()]][i] = Some(v.vote);
        match v.vote {
            VoteChoice::Yes => {
                yes_total[i] += 1;
                cast_total[i] += 1;
            }
            VoteChoice::No => cast_total[i] += 1,
            VoteChoice::Abstain => {}
        }
    }

    let codes = party_codes(r.members.iter().map(|m| m.party.clone()));
    let max_seniority = r.members.iter().map(|m| m.seniority.abs()).fold(0.0, f64::max);
    let static_features: Vec<[f64; 3]> = members
        .iter()
        .map(|&k| {
            let m = &r.members[k];
            let seniority = if max_seniority > 0.0 { m.seniority / max_seniority } else { 0.0 };
            [codes[&m.party], district_hash(&m.district), seniority]
        })
        .collect();

    let mut graphs = Vec::with_capacity(bills.len());
    for (b, bill_votes) in votes.iter().enumerate() {
        let nodes = (0..n)
            .map(|i| {
                let (mut yes, mut cast) = (yes_total[i], cast_total[i]);
                match bill_votes[i] {
                    Some(VoteChoice::Yes) => {
                        yes -= 1;
                        cast -= 1;
                    }
                    Some(VoteChoice::No) => cast -= 1,
                    _ => {}
                }
                let rate = if cast > 0 { yes as f64 / cast as f64 } else { 0.5 };
                let [party, district, seniority] = static_features[i];
                Node {
                    id: r.members[members[i]].member_id,
                    kind: NodeKind::Legislator,
                    features: vec![party, district, seniority, rate],
                }
            })
            .collect::<Vec<_>>();

        let own = &sponsors[b];
        let pair_cospons = |i: usize, j: usize| {
            cospons[i * n + j] - usize::from(own.contains(&i) && own.contains(&j))
        };
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| shared[i * n + j] > 0).collect();
        let max_cospons = pairs.iter().map(|&(i, j)| pair_cospons(i, j)).max().unwrap_or(0).max(1) as f64;
        let edges = pairs
            .iter()
            .map(|&(i, j)| {
                let mut features = vec![0.0; 4];
                features[SHARED_COMMITTEES] = shared[i * n + j] as f64 / max_shared;
                features[COSPONSORSHIP] = pair_cospons(i, j) as f64 / max_cospons;
                features[CHAIR_LINK] = if chair[i * n + j] { 1.0 } else { 0.0 };
                Edge { src: nodes[i].id, dst: nodes[j].id, features }
            })
            .collect();

        let yes = bill_votes.iter().filter(|v| **v == Some(VoteChoice::Yes)).count();
        let no = bill_votes.iter().filter(|v| **v == Some(VoteChoice::No)).count();
        let share = if yes + no > 0 { yes as f64 / (yes + no) as f64 } else { 0.0 };
        let node_labels = bill_votes
            .iter()
            .map(|v| match v {
                Some(VoteChoice::Yes) => Some(1.0),
                Some(VoteChoice::No) => Some(0.0),
                _ => None,
            })
            .collect();
        graphs.push(PoliticalGraph {
            graph_id: b as u64,
            nodes,
            edges,
            label: vec![if share > 0.5 { 1.0 } else { 0.0 }, share],
            node_labels: Some(node_labels),
        });
    }
    let mut ds = GraphDataset::new(GraphDims::new(4, 4, vec![LabelKind::Binary, LabelKind::Real]));
    ds.graphs = graphs;
    ds.ground_truth = Some(serde_json::to_value(BillIndex { bill_ids: bills }).expect("plain struct"));
    Ok(ds)
}

/// Presence bit vectors in roster order, one event per distinct timestamp.
///
/// Records sharing a timestamp merge into one event: the union of present
/// actors and the last recorded outcome. `q = 1` and `binary_x = true`.
pub fn encode_event_log(r: &RecordBundle, roster: &[u64]) -> Result<EventSequence, FeaturizeError> {
    let slot: HashMap<u64, usize> = roster.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    if slot.len() != roster.len() {
        return Err(FeaturizeError::Invalid("roster lists an actor twice".into()));
    }
    let mut seq = EventSequence::new(roster.len(), 1, true);
    for (k, e) in r.events.iter().enumerate() {
        if !(e.timestamp.is_finite() && e.timestamp >= 0.0) {
            return Err(FeaturizeError::Invalid(format!("event {k} has timestamp {}", e.timestamp)));
        }
        let merge = match seq.events.last() {
            Some(last) if e.timestamp < last.t => {
                return Err(FeaturizeError::Invalid(format!("event {k} timestamp {} out of order", e.timestamp)));
            }
            Some(last) => last.t == e.timestamp,
            None => false,
        };
        if !merge {
            seq.events.push(Event::new(e.timestamp, vec![0.0; roster.len()], None));
        }
        let cur = seq.events.last_mut().expect("just pushed");
        for id in &e.actor_ids {
            let &u = slot.get(id).ok_or_else(|| FeaturizeError::Referential {
                id: *id,
                context: format!("event {k} (not in roster)"),
            })?;
            cur.x[u] = 1.0;
        }
        if let Some(o) = e.outcome {
            cur.y = Some(vec![o]);
        }
    }
    Ok(seq)
}
