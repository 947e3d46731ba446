use std::fs;
use std::path::Path;

use serde_json::Value;

use super::manifest::{RunManifest, StageStatus};
use super::HarnessError;

/// Rows shown per ranking.
const TOP_ROWS: usize = 5;

const METRIC_KEYS: [&str; 5] = ["loss", "accuracy", "auc", "mse", "next_event_loss"];

/// A run summary in two renderings of the same rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub csv: String,
}

struct Row {
    section: &'static str,
    item: String,
    field: String,
    value: String,
}

struct Rows(Vec<Row>);

impl Rows {
    fn push(&mut self, section: &'static str, item: impl Into<String>, field: impl Into<String>, value: impl Into<String>) {
        self.0.push(Row { section, item: item.into(), field: field.into(), value: value.into() });
    }
}

/// JSON value as stored: numbers keep their written digits, null is absent.
fn verbatim(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => "absent".into(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn field_or_absent(s: &str) -> String {
    if s.is_empty() { "absent".into() } else { s.to_string() }
}

fn read_text(dir: &Path, name: &str) -> Result<String, HarnessError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| HarnessError::io(path, e))
}

fn read_json(dir: &Path, name: &str) -> Result<Value, HarnessError> {
    serde_json::from_str(&read_text(dir, name)?)
        .map_err(|e| HarnessError::Integrity { path: name.into(), message: format!("unreadable JSON: {e}") })
}

fn read_csv(dir: &Path, name: &str) -> Result<Vec<Vec<String>>, HarnessError> {
    let text = read_text(dir, name)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Integrity { path: name.into(), message: format!("unreadable CSV: {e}") })
}

fn ranking_rows(rows: &mut Rows, section: &'static str, dir: &Path, name: &str) -> Result<(), HarnessError> {
    // columns: rank,index,action,score,delta
    for r in read_csv(dir, name)?.iter().take(TOP_ROWS) {
        let item = format!("rank {}", r[0]);
        rows.push(section, item.clone(), "action", r[2].clone());
        rows.push(section, item.clone(), "score", r[3].clone());
        rows.push(section, item, "delta", r[4].clone());
    }
    Ok(())
}

fn summary_rows(rows: &mut Rows, section: &'static str, summary: &Value) {
    for key in ["baseline", "top_action", "value"] {
        rows.push(section, "", key, verbatim(summary.get(key)));
    }
}

fn collect(dir: &Path, m: &RunManifest) -> Result<Rows, HarnessError> {
    let mut rows = Rows(Vec::new());
    let has = |name: &str| m.artifact(name).is_some();

    rows.push("run", "", "seed", m.seed.to_string());
    rows.push("run", "", "config_hash", m.config_hash.clone());
    for s in &m.stages {
        let status = match s.status {
            StageStatus::Ok => "ok",
            StageStatus::Failed => "failed",
        };
        rows.push("run", s.stage.name(), "status", status);
    }

    let metrics = if has("metrics.json") { Some(read_json(dir, "metrics.json")?) } else { None };
    if let Some(v) = &metrics {
        for key in ["model_kind", "task", "data", "items"] {
            rows.push("metrics", "", key, verbatim(v.get(key)));
        }
    }
    for key in METRIC_KEYS {
        rows.push("metrics", "", key, verbatim(metrics.as_ref().and_then(|v| v.get(key))));
    }

    if has("history.csv") {
        let hist = read_csv(dir, "history.csv")?;
        rows.push("training", "", "epochs", hist.len().to_string());
        if let Some(last) = hist.last() {
            rows.push("training", "", "final_loss", field_or_absent(&last[1]));
            rows.push("training", "", "final_val_metric", field_or_absent(&last[2]));
        }
    }

    if has("importance.csv") {
        let mut imps = read_csv(dir, "importance.csv")?;
        // Sort by the stored value; the printed text is the stored text.
        imps.sort_by(|a, b| {
            let key = |r: &Vec<String>| r[1].parse::<f64>().unwrap_or(f64::NEG_INFINITY);
            key(b).total_cmp(&key(a))
        });
        for (k, r) in imps.iter().enumerate() {
            rows.push("importance", r[0].clone(), "rank", (k + 1).to_string());
            rows.push("importance", r[0].clone(), "importance", r[1].clone());
            rows.push("importance", r[0].clone(), "std", r[2].clone());
        }
    }

    if has("substructure.json") {
        let v = read_json(dir, "substructure.json")?;
        rows.push("substructure", "", "graph_id", verbatim(v.get("graph_id")));
        let sub = v.get("substructure");
        let edges = sub
            .and_then(|s| s.get("edges"))
            .and_then(Value::as_array)
            .map(|es| {
                es.iter()
                    .map(|e| format!("{}->{}", verbatim(e.get(0)), verbatim(e.get(1))))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        rows.push("substructure", "", "edges", field_or_absent(&edges));
        for key in ["probability", "full_probability", "target_class"] {
            rows.push("substructure", "", key, verbatim(sub.and_then(|s| s.get(key))));
        }
    }

    if has("hawkes_fit.json") {
        let v = read_json(dir, "hawkes_fit.json")?;
        for key in ["n", "events", "iterations", "converged", "objective", "log_likelihood", "edges", "recovery_auc"] {
            rows.push("hawkes", "", key, verbatim(v.get(key)));
        }
    }

    if has("attack.json") {
        let v = read_json(dir, "attack.json")?;
        if let Some(plan) = v.get("action_plan") {
            let actions = plan
                .get("actions")
                .and_then(Value::as_array)
                .map(|a| a.iter().map(|x| verbatim(Some(x))).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            rows.push("action_plan", "", "sequence", verbatim(v.get("sequence")));
            rows.push("action_plan", "", "actions", field_or_absent(&actions));
            rows.push("action_plan", "", "outcome", verbatim(plan.get("outcome")));
        } else {
            rows.push("edge_additions", "", "graph_id", verbatim(v.get("graph_id")));
            if let Some(s) = v.get("edge_additions") {
                summary_rows(&mut rows, "edge_additions", s);
            }
            if has("attack.csv") {
                ranking_rows(&mut rows, "edge_additions", dir, "attack.csv")?;
            }
            if let Some(s) = v.get("jurisdiction") {
                summary_rows(&mut rows, "jurisdiction", s);
            }
            if has("persuadable.csv") {
                for r in read_csv(dir, "persuadable.csv")?.iter().take(TOP_ROWS) {
                    let item = format!("rank {}", r[0]);
                    rows.push("persuadable", item.clone(), "node_id", r[1].clone());
                    rows.push("persuadable", item.clone(), "probability", r[2].clone());
                    rows.push("persuadable", item, "margin", r[3].clone());
                }
            }
            match v.get("portfolio") {
                Some(p) if !p.is_null() => {
                    let ids = p
                        .get("ids")
                        .and_then(Value::as_array)
                        .map(|a| a.iter().map(|x| verbatim(Some(x))).collect::<Vec<_>>().join(" "))
                        .unwrap_or_default();
                    rows.push("portfolio", "", "ids", field_or_absent(&ids));
                    rows.push("portfolio", "", "value", verbatim(p.get("value")));
                    rows.push("portfolio", "", "cost", verbatim(p.get("cost")));
                }
                _ => rows.push("portfolio", "", "ids", "absent"),
            }
        }
    }

    if has("defense.json") {
        let v = read_json(dir, "defense.json")?;
        rows.push("defense", "", "graph_id", verbatim(v.get("graph_id")));
        rows.push("defense", "", "baseline", verbatim(v.get("baseline")));
        let edge = match v.get("choice_edge") {
            Some(Value::Array(e)) => format!("{}->{}", verbatim(e.first()), verbatim(e.get(1))),
            _ => "absent".into(),
        };
        rows.push("defense", "", "choice_edge", edge);
        rows.push("defense", "", "value", verbatim(v.get("value")));
    }
    Ok(rows)
}

fn render(rows: &Rows) -> Report {
    let mut text = String::from("run report\n");
    let mut section = "";
    for r in &rows.0 {
        if r.section != section {
            section = r.section;
            text.push_str(&format!("\n[{section}]\n"));
        }
        if r.item.is_empty() {
            text.push_str(&format!("{}: {}\n", r.field, r.value));
        } else {
            text.push_str(&format!("{} {}: {}\n", r.item, r.field, r.value));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["section", "item", "field", "value"]).expect("in-memory write");
    for r in &rows.0 {
        w.write_record([r.section, &r.item, &r.field, &r.value]).expect("in-memory write");
    }
    let csv = String::from_utf8(w.into_inner().expect("flush")).expect("utf-8");
    Report { text, csv }
}

/// Summarizes the run recorded in `dir` after re-hashing every artifact.
/// Values are copied from the artifact files as written.
pub fn report(dir: &Path) -> Result<Report, HarnessError> {
    let m = RunManifest::read(dir)?;
    m.verify(dir)?;
    Ok(render(&collect(dir, &m)?))
}

/// [`report`], also written to `report.txt` and `report.csv` in `dir`.
pub fn write_report(dir: &Path) -> Result<Report, HarnessError> {
    let r = report(dir)?;
    for (name, body) in [("report.txt", &r.text), ("report.csv", &r.csv)] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(r)
}
