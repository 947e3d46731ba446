use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAction {
    /// Position of the action in the caller's candidate list.
    pub index: usize,
    pub action: String,
    pub score: f64,
    /// `score - baseline`.
    pub delta: f64,
}

/// A ranking of candidate actions, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionReport {
    pub kind: String,
    pub baseline: f64,
    pub items: Vec<RankedAction>,
    pub checkpoint_id: Option<String>,
    pub dataset_id: Option<String>,
    pub seed: Option<u64>,
}

impl InterventionReport {
    /// Builds a report from `(index, action, score)` triples, sorted by
    /// descending score. Equal scores keep their input order.
    pub fn ranked(kind: &str, baseline: f64, mut scored: Vec<(usize, String, f64)>) -> Self {
        scored.sort_by(|a, b| b.2.total_cmp(&a.2));
        Self {
            kind: kind.into(),
            baseline,
            items: scored
                .into_iter()
                .map(|(index, action, score)| RankedAction { index, action, score, delta: score - baseline })
                .collect(),
            checkpoint_id: None,
            dataset_id: None,
            seed: None,
        }
    }

    pub fn with_provenance(mut self, checkpoint_id: Option<String>, dataset_id: Option<String>, seed: Option<u64>) -> Self {
        self.checkpoint_id = checkpoint_id;
        self.dataset_id = dataset_id;
        self.seed = seed;
        self
    }

    pub fn top(&self) -> Option<&RankedAction> {
        self.items.first()
    }

    /// CSV with columns `rank,index,action,score,delta`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "index", "action", "score", "delta"]).expect("in-memory write");
        for (rank, it) in self.items.iter().enumerate() {
            w.write_record([
                (rank + 1).to_string(),
                it.index.to_string(),
                it.action.clone(),
                it.score.to_string(),
                it.delta.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// `{kind, baseline, top_action, value, items, checkpoint_id, dataset_id, seed}`
    /// where `value` is the top score (null when there are no items).
    pub fn summary_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "baseline": self.baseline,
            "top_action": self.top().map(|t| t.action.clone()),
            "value": self.top().map(|t| t.score),
            "items": self.items.len(),
            "checkpoint_id": self.checkpoint_id,
            "dataset_id": self.dataset_id,
            "seed": self.seed,
        })
    }
}
