use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, GenerateKind, Requirement, Stage};
use super::manifest::{sha256_hex, FileRecord, RunManifest, StageRecord, StageStatus};
use super::HarnessError;
use crate::data::{Checkpoint, DataFile, FlatParams, GraphDataset, LabelKind, PoliticalGraph, SequenceSet};
use crate::featurize::{
    build_graphs_from_records, encode_event_log, normalize_features, split_dataset, split_sequences, RecordBundle,
    SplitPolicy,
};
use crate::graphlearn::{
    evaluate, evaluate_pairs, extract_substructure, forward_graph, history_csv, holdout_edges, init_model,
    permutation_importance, train, EpochRecord, GraphModelParams, Task, TrainConfig,
};
use crate::intervene::{
    defend_minimax, nominate_jurisdiction, optimize_action_sequence, portfolio_select, rank_edge_additions,
    rank_persuadable_nodes, EdgeCandidate, Opportunity,
};
use crate::metrics;
use crate::ppnet::{fit_hawkes, infer_edges, log_likelihood, InferredEdges};
use crate::rng::derive_seed;
use crate::seqlearn::{evaluate_rnn, init_rnn, train_rnn, RnnParams, RnnTrainConfig};
use crate::synthgen::{gen_graph_dataset, gen_sequences, simulate_hawkes, HawkesParams, SimulateOptions};

type StageResult<T> = Result<T, String>;

fn fail(e: impl Display) -> String {
    e.to_string()
}

/// A file read by a stage, with its raw bytes.
struct Loaded {
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Loaded {
    fn text(&self) -> StageResult<&str> {
        std::str::from_utf8(&self.bytes).map_err(|e| format!("{}: {e}", self.path.display()))
    }

    fn id(&self) -> String {
        sha256_hex(&self.bytes)
    }

    fn data(&self) -> StageResult<DataFile> {
        DataFile::from_ndjson(self.text()?).map_err(|e| format!("{}: {e}", self.path.display()))
    }
}

enum Model {
    Graph(GraphModelParams),
    Rnn(RnnParams),
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    inputs: Vec<FileRecord>,
    written: Vec<String>,
}

impl<'a> Ctx<'a> {
    fn seed(&self, purpose: &str) -> u64 {
        derive_seed(self.cfg.seed, purpose)
    }

    fn display_path(&self, path: &Path) -> String {
        match path.strip_prefix(self.out) {
            Ok(rel) => rel.display().to_string(),
            Err(_) => path.display().to_string(),
        }
    }

    fn resolve(&self, r: &Requirement) -> Option<PathBuf> {
        match r.explicit {
            Some(p) => Some(p.to_path_buf()),
            None => r.defaults.iter().map(|d| self.out.join(d)).find(|p| p.exists()),
        }
    }

    fn require(&self, stage: Stage, index: usize) -> StageResult<PathBuf> {
        let reqs = self.cfg.requirements(stage);
        self.resolve(&reqs[index]).ok_or_else(|| format!("no {} available", reqs[index].what))
    }

    fn optional(&self, stage: Stage, index: usize) -> Option<PathBuf> {
        self.resolve(&self.cfg.requirements(stage)[index])
    }

    fn record_input(&mut self, path: &Path) -> StageResult<()> {
        let rec = FileRecord::of_file(path, self.display_path(path)).map_err(fail)?;
        self.inputs.push(rec);
        Ok(())
    }

    fn load(&mut self, path: &Path) -> StageResult<Loaded> {
        let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.inputs.push(FileRecord {
            path: self.display_path(path),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(Loaded { path: path.to_path_buf(), bytes })
    }

    fn load_model(&mut self, path: &Path) -> StageResult<(Model, Loaded)> {
        let file = self.load(path)?;
        let ck = Checkpoint::from_json(file.text()?).map_err(fail)?;
        let model = match ck.model_kind.as_str() {
            GraphModelParams::MODEL_KIND => Model::Graph(GraphModelParams::from_checkpoint(&ck).map_err(fail)?),
            RnnParams::MODEL_KIND => Model::Rnn(RnnParams::from_checkpoint(&ck).map_err(fail)?),
            other => return Err(format!("{}: model kind {other:?} cannot be used here", path.display())),
        };
        Ok((model, file))
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> StageResult<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> StageResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(fail)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_data(&mut self, name: &str, df: &DataFile) -> StageResult<()> {
        let text = df.to_ndjson().map_err(fail)?;
        self.write(name, text.as_bytes())
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn graphs(df: DataFile, what: &str) -> StageResult<GraphDataset> {
    match df {
        DataFile::Graphs(ds) => Ok(ds),
        other => Err(format!("{what} must be a graph dataset, found {:?}", other.kind())),
    }
}

fn sequences(df: DataFile, what: &str) -> StageResult<SequenceSet> {
    match df {
        DataFile::Sequences(s) => Ok(s),
        other => Err(format!("{what} must be an event-sequence file, found {:?}", other.kind())),
    }
}

fn pick_graph(ds: &GraphDataset, index: usize) -> StageResult<&PoliticalGraph> {
    ds.graphs.get(index).ok_or_else(|| format!("graph position {index} out of range for {} graphs", ds.len()))
}

/// Ordered pairs of distinct node ids without an edge, ascending by `(src, dst)`.
fn absent_pairs(g: &PoliticalGraph, limit: usize, features: &[f64]) -> Vec<EdgeCandidate> {
    let mut ids: Vec<u64> = g.nodes.iter().map(|n| n.id).collect();
    ids.sort_unstable();
    let mut out = Vec::new();
    'outer: for &s in &ids {
        for &d in &ids {
            if out.len() >= limit {
                break 'outer;
            }
            if s != d && !g.has_edge(s, d) {
                out.push(EdgeCandidate { src: s, dst: d, features: features.to_vec() });
            }
        }
    }
    out
}

fn candidate_features(configured: &Option<Vec<f64>>, p: usize) -> StageResult<Vec<f64>> {
    match configured {
        Some(f) if f.len() != p => Err(format!("candidate_features has {} values, edges carry {p}", f.len())),
        Some(f) => Ok(f.clone()),
        None => Ok((0..p).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()),
    }
}

fn task_name(task: Task) -> &'static str {
    match task {
        Task::GraphLabel => "graph_label",
        Task::NodeLabel => "node_label",
        Task::Link => "link",
    }
}

fn stage_generate(ctx: &mut Ctx) -> StageResult<()> {
    let g = &ctx.cfg.generate;
    let seed = ctx.seed("generate");
    match g.kind {
        GenerateKind::Graphs => {
            let ds = gen_graph_dataset(&g.graphs, seed).map_err(fail)?;
            ctx.write_data("dataset.ndjson", &DataFile::Graphs(ds))
        }
        GenerateKind::Sequences => {
            let set = gen_sequences(&g.sequences, g.count, seed).map_err(fail)?;
            ctx.write_data("dataset.ndjson", &DataFile::Sequences(set))
        }
        GenerateKind::PointProcess => {
            let params = g.hawkes.params();
            let opts = SimulateOptions { force: g.hawkes.force, ..Default::default() };
            let mpp = simulate_hawkes(&params, g.hawkes.horizon, seed, opts).map_err(fail)?;
            ctx.write_data("dataset.ndjson", &DataFile::PointProcess(mpp))?;
            let ck = params.to_checkpoint().to_json().map_err(fail)?;
            ctx.write("hawkes_truth.json", ck.as_bytes())
        }
    }
}

fn stage_featurize(ctx: &mut Ctx) -> StageResult<()> {
    let dir = ctx.require(Stage::Featurize, 0)?;
    let bundle = RecordBundle::read_dir(&dir).map_err(fail)?;
    for table in ["members", "committees", "sponsorships", "votes", "events"] {
        let path = dir.join(format!("{table}.ndjson"));
        if path.exists() {
            ctx.record_input(&path)?;
        }
    }
    let ds = build_graphs_from_records(&bundle).map_err(fail)?;
    ctx.write_data("dataset.ndjson", &DataFile::Graphs(ds))?;
    if !bundle.events.is_empty() {
        let roster = match &ctx.cfg.featurize.roster {
            Some(r) => r.clone(),
            None => {
                let mut ids: Vec<u64> = bundle.members.iter().map(|m| m.member_id).collect();
                ids.sort_unstable();
                ids
            }
        };
        let seq = encode_event_log(&bundle, &roster).map_err(fail)?;
        let set = SequenceSet { sequences: vec![seq], ground_truth: None };
        ctx.write_data("sequences.ndjson", &DataFile::Sequences(set))?;
    }
    Ok(())
}

fn stage_split(ctx: &mut Ctx) -> StageResult<()> {
    let path = ctx.require(Stage::Split, 0)?;
    let df = ctx.load(&path)?.data()?;
    let s = &ctx.cfg.split;
    let policy = SplitPolicy { kind: s.kind, fractions: s.fractions, seed: ctx.seed("split") };
    let names = ["train.ndjson", "val.ndjson", "test.ndjson"];
    match df {
        DataFile::Graphs(ds) => {
            let mut parts = split_dataset(&ds, &policy).map_err(fail)?;
            if s.normalize {
                let (train, rest, stats) = normalize_features(&parts[0], &[&parts[1], &parts[2]]).map_err(fail)?;
                let [val, test]: [GraphDataset; 2] = rest.try_into().expect("two normalized parts");
                parts = [train, val, test];
                ctx.write_json("norm_stats.json", &stats)?;
            }
            for (name, part) in names.iter().zip(parts) {
                ctx.write_data(name, &DataFile::Graphs(part))?;
            }
        }
        DataFile::Sequences(set) => {
            let parts = split_sequences(&set, &policy).map_err(fail)?;
            for (name, part) in names.iter().zip(parts) {
                ctx.write_data(name, &DataFile::Sequences(part))?;
            }
        }
        DataFile::PointProcess(_) => return Err("point-process data cannot be split".into()),
    }
    Ok(())
}

fn stage_train(ctx: &mut Ctx) -> StageResult<()> {
    let path = ctx.require(Stage::Train, 0)?;
    let df = ctx.load(&path)?.data()?;
    let val_df = match ctx.optional(Stage::Train, 1) {
        Some(p) => Some(ctx.load(&p)?.data()?),
        None => None,
    };
    let t = &ctx.cfg.train;
    let (ck, history): (Checkpoint, Vec<EpochRecord>) = match df {
        DataFile::Graphs(ds) => {
            let val = match val_df {
                Some(v) => graphs(v, "validation data")?,
                None => GraphDataset::new(ds.dims.clone()),
            };
            let init = init_model(&ds.dims, t.layers, t.hidden, ctx.seed("init"));
            let cfg = TrainConfig {
                lr: t.lr,
                epochs: t.epochs,
                seed: ctx.seed("train"),
                task: t.task,
                negative_ratio: t.negative_ratio,
            };
            let (params, history) = train(&init, &ds, &val, &cfg).map_err(fail)?;
            (params.to_checkpoint(), history)
        }
        DataFile::Sequences(set) => {
            let val = match val_df {
                Some(v) => sequences(v, "validation data")?.sequences,
                None => Vec::new(),
            };
            let first = set.sequences.first().ok_or("training set has no sequences")?;
            let init = init_rnn(first.d, first.q, t.hidden, t.binary_y, ctx.seed("init"));
            let cfg = RnnTrainConfig {
                lr: t.lr,
                epochs: t.epochs,
                seed: ctx.seed("train"),
                supervision: t.supervision,
                next_event_weight: t.next_event_weight,
            };
            let (params, history) = train_rnn(&init, &set.sequences, &val, &cfg).map_err(fail)?;
            (params.to_checkpoint(), history)
        }
        DataFile::PointProcess(_) => return Err("use hawkes-fit for point-process data".into()),
    };
    ctx.write("model.json", ck.to_json().map_err(fail)?.as_bytes())?;
    ctx.write("history.csv", history_csv(&history).as_bytes())
}

fn stage_eval(ctx: &mut Ctx) -> StageResult<()> {
    let (model, _) = ctx.load_model(&ctx.require(Stage::Eval, 0)?)?;
    let data_path = ctx.require(Stage::Eval, 1)?;
    let df = ctx.load(&data_path)?.data()?;
    let data_name = ctx.display_path(&data_path);
    let task = ctx.cfg.train.task;
    let metrics = match model {
        Model::Graph(params) => {
            let ds = graphs(df, "evaluation data")?;
            let m = if task == Task::Link {
                let split = holdout_edges(&ds, ctx.cfg.eval.holdout_fraction, ctx.seed("eval")).map_err(fail)?;
                evaluate_pairs(&params, &split.observed, &split.held_out).map_err(fail)?
            } else {
                evaluate(&params, &ds, task).map_err(fail)?
            };
            json!({
                "model_kind": GraphModelParams::MODEL_KIND,
                "task": task_name(task),
                "data": data_name,
                "items": ds.len(),
                "loss": m.loss,
                "accuracy": m.accuracy,
                "auc": m.auc,
                "mse": m.mse,
                "next_event_loss": Value::Null,
            })
        }
        Model::Rnn(params) => {
            let set = sequences(df, "evaluation data")?;
            let m = evaluate_rnn(&params, &set.sequences).map_err(fail)?;
            json!({
                "model_kind": RnnParams::MODEL_KIND,
                "task": "sequence_outcome",
                "data": data_name,
                "items": set.sequences.len(),
                "loss": m.outcome_loss,
                "accuracy": Value::Null,
                "auc": Value::Null,
                "mse": m.mse,
                "next_event_loss": m.next_event_loss,
            })
        }
    };
    ctx.write_json("metrics.json", &metrics)
}

fn stage_explain(ctx: &mut Ctx) -> StageResult<()> {
    let (model, _) = ctx.load_model(&ctx.require(Stage::Explain, 0)?)?;
    let Model::Graph(params) = model else {
        return Err("explain needs a graph model".into());
    };
    let data_path = ctx.require(Stage::Explain, 1)?;
    let ds = graphs(ctx.load(&data_path)?.data()?, "explanation data")?;
    let e = &ctx.cfg.explain;
    let task = ctx.cfg.train.task;
    let imps = permutation_importance(&params, &ds, task, e.repeats, ctx.seed("explain")).map_err(fail)?;
    let rows = imps.iter().map(|f| vec![f.feature.clone(), f.importance.to_string(), f.std.to_string()]);
    let text = csv_text(&["feature", "importance", "std"], rows);
    ctx.write("importance.csv", text.as_bytes())?;
    if task == Task::GraphLabel {
        let g = pick_graph(&ds, e.graph)?;
        let sub = extract_substructure(&params, g, e.column, e.budget.min(g.edges.len())).map_err(fail)?;
        let value = json!({ "graph_id": g.graph_id, "column": e.column, "substructure": sub });
        ctx.write_json("substructure.json", &value)?;
    }
    Ok(())
}

fn stage_hawkes_fit(ctx: &mut Ctx) -> StageResult<()> {
    let path = ctx.require(Stage::HawkesFit, 0)?;
    let mpp = match ctx.load(&path)?.data()? {
        DataFile::PointProcess(m) => m,
        other => return Err(format!("hawkes-fit needs point-process data, found {:?}", other.kind())),
    };
    let truth = match ctx.optional(Stage::HawkesFit, 1) {
        Some(p) => {
            let file = ctx.load(&p)?;
            let ck = Checkpoint::from_json(file.text()?).map_err(fail)?;
            Some(HawkesParams::from_checkpoint(&ck).map_err(fail)?)
        }
        None => None,
    };
    let h = &ctx.cfg.hawkes_fit;
    let n = mpp.n;
    let fit = fit_hawkes(&mpp, n, &h.fit_config(ctx.seed("hawkes-fit"))).map_err(fail)?;
    let edges = infer_edges(&fit.params.w, n, h.tau).map_err(fail)?;
    let recovery_auc = match &truth {
        Some(t) if t.n() != n => return Err(format!("planted parameters have n = {}, data has n = {n}", t.n())),
        Some(t) => {
            let (mut scores, mut labels) = (Vec::new(), Vec::new());
            for v in 0..n {
                for u in (0..n).filter(|&u| u != v) {
                    scores.push(fit.params.weight(v, u));
                    labels.push(t.weight(v, u) > 0.0);
                }
            }
            metrics::auc(&scores, &labels)
        }
        None => None,
    };
    let summary = json!({
        "n": n,
        "events": mpp.events.len(),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "objective": fit.trajectory.last(),
        "log_likelihood": log_likelihood(&fit.params, &mpp).map_err(fail)?,
        "tau": h.tau,
        "edges": edges.edges.len(),
        "recovery_auc": recovery_auc,
    });
    ctx.write("hawkes.json", fit.params.to_checkpoint().to_json().map_err(fail)?.as_bytes())?;
    let rows = fit.trajectory.iter().enumerate().map(|(k, v)| vec![k.to_string(), v.to_string()]);
    ctx.write("hawkes_trajectory.csv", csv_text(&["iteration", "objective"], rows).as_bytes())?;
    ctx.write_json("hawkes_fit.json", &summary)?;
    let mut ds = GraphDataset::new(InferredEdges::dims());
    ds.graphs.push(edges.graph);
    ctx.write_data("edges.ndjson", &DataFile::Graphs(ds))
}

fn stage_attack(ctx: &mut Ctx) -> StageResult<()> {
    let (model, model_file) = ctx.load_model(&ctx.require(Stage::Attack, 0)?)?;
    let data_path = ctx.require(Stage::Attack, 1)?;
    let data_file = ctx.load(&data_path)?;
    let (ck_id, ds_id) = (model_file.id(), data_file.id());
    let a = &ctx.cfg.attack;
    let seed = ctx.cfg.seed;
    match model {
        Model::Graph(params) => {
            let ds = graphs(data_file.data()?, "attack data")?;
            let g = pick_graph(&ds, a.graph)?;
            let feats = candidate_features(&a.candidate_features, ds.dims.p)?;
            let cands = absent_pairs(g, a.max_candidates, &feats);
            let prov = |r: crate::intervene::InterventionReport| {
                r.with_provenance(Some(ck_id.clone()), Some(ds_id.clone()), Some(seed))
            };
            let edges = prov(rank_edge_additions(&params, g, &cands, a.outcome).map_err(fail)?);
            let nominate = prov(nominate_jurisdiction(&params, &ds, a.outcome).map_err(fail)?);
            let persuadable = rank_persuadable_nodes(&params, g, a.top_k).map_err(fail)?;
            let portfolio = if params.label_kinds.get(a.outcome) == Some(&LabelKind::Binary) {
                let opps = ds
                    .graphs
                    .iter()
                    .map(|h| {
                        Ok(Opportunity {
                            id: h.graph_id,
                            success_prob: forward_graph(&params, h).map_err(fail)?.graph[a.outcome],
                            cost: h.node_count() as f64,
                        })
                    })
                    .collect::<StageResult<Vec<_>>>()?;
                Some(portfolio_select(&opps, a.budget).map_err(fail)?)
            } else {
                None
            };
            ctx.write("attack.csv", edges.to_csv().as_bytes())?;
            ctx.write("jurisdiction.csv", nominate.to_csv().as_bytes())?;
            let rows = persuadable.iter().enumerate().map(|(k, p)| {
                vec![(k + 1).to_string(), p.node_id.to_string(), p.probability.to_string(), p.margin.to_string()]
            });
            ctx.write("persuadable.csv", csv_text(&["rank", "node_id", "probability", "margin"], rows).as_bytes())?;
            let summary = json!({
                "model_kind": GraphModelParams::MODEL_KIND,
                "graph_id": g.graph_id,
                "outcome": a.outcome,
                "edge_additions": edges.summary_json(),
                "jurisdiction": nominate.summary_json(),
                "persuadable": persuadable,
                "portfolio": portfolio,
                "checkpoint_id": ck_id,
                "dataset_id": ds_id,
                "seed": seed,
            });
            ctx.write_json("attack.json", &summary)
        }
        Model::Rnn(params) => {
            let set = sequences(data_file.data()?, "attack data")?;
            let prefix = set
                .sequences
                .get(a.graph)
                .ok_or_else(|| format!("sequence position {} out of range", a.graph))?;
            let actions = a.actions.clone().unwrap_or_else(|| {
                let mut acts = vec![vec![0.0; params.d]];
                acts.extend((0..params.d).map(|u| (0..params.d).map(|k| if k == u { 1.0 } else { 0.0 }).collect()));
                acts
            });
            let plan = optimize_action_sequence(&params, prefix, a.horizon, a.beam_width, &actions).map_err(fail)?;
            let summary = json!({
                "model_kind": RnnParams::MODEL_KIND,
                "sequence": a.graph,
                "horizon": a.horizon,
                "beam_width": a.beam_width,
                "actions": actions,
                "action_plan": plan,
                "checkpoint_id": ck_id,
                "dataset_id": ds_id,
                "seed": seed,
            });
            ctx.write_json("attack.json", &summary)
        }
    }
}

fn stage_defend(ctx: &mut Ctx) -> StageResult<()> {
    let (model, model_file) = ctx.load_model(&ctx.require(Stage::Defend, 0)?)?;
    let Model::Graph(params) = model else {
        return Err("defend needs a graph model".into());
    };
    let data_path = ctx.require(Stage::Defend, 1)?;
    let data_file = ctx.load(&data_path)?;
    let ds = graphs(data_file.data()?, "defense data")?;
    let d = &ctx.cfg.defend;
    let g = pick_graph(&ds, d.graph)?;
    let removals: Vec<(u64, u64)> = g.edges.iter().take(d.removals).map(|e| (e.src, e.dst)).collect();
    let feats = candidate_features(&d.candidate_features, ds.dims.p)?;
    let additions = absent_pairs(g, d.additions, &feats);
    let defense = defend_minimax(&params, g, &removals, &additions, d.outcome).map_err(fail)?;
    let summary = json!({
        "graph_id": g.graph_id,
        "outcome": d.outcome,
        "removals": removals,
        "additions": additions.iter().map(|c| (c.src, c.dst)).collect::<Vec<_>>(),
        "baseline": defense.baseline,
        "values": defense.values,
        "choice": defense.choice,
        "choice_edge": defense.choice.map(|k| removals[k]),
        "value": defense.value(),
        "checkpoint_id": model_file.id(),
        "dataset_id": data_file.id(),
        "seed": ctx.cfg.seed,
    });
    ctx.write_json("defense.json", &summary)
}

fn run_stage(stage: Stage, ctx: &mut Ctx) -> StageResult<()> {
    match stage {
        Stage::Generate => stage_generate(ctx),
        Stage::Featurize => stage_featurize(ctx),
        Stage::Split => stage_split(ctx),
        Stage::Train => stage_train(ctx),
        Stage::Eval => stage_eval(ctx),
        Stage::Explain => stage_explain(ctx),
        Stage::HawkesFit => stage_hawkes_fit(ctx),
        Stage::Attack => stage_attack(ctx),
        Stage::Defend => stage_defend(ctx),
    }
}

/// Validates `config`, then runs its stages in order inside `out_dir`.
///
/// The manifest is rewritten after every stage. Records of stages not rerun
/// are kept from an existing manifest. When a stage fails its files are
/// renamed with a `.partial` suffix, the failure is recorded and the run stops.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest, HarnessError> {
    config.validate(out_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut manifest = RunManifest::read(out_dir)
        .ok()
        .unwrap_or_else(|| RunManifest::new(String::new(), config.seed));
    manifest.config_hash = config.hash();
    manifest.seed = config.seed;

    for &stage in &config.stages {
        log::info!("stage {stage}: start");
        let start = Instant::now();
        let mut ctx = Ctx { cfg: config, out: out_dir, inputs: Vec::new(), written: Vec::new() };
        let result = run_stage(stage, &mut ctx);
        let wall_ms = start.elapsed().as_millis() as u64;
        match result {
            Ok(()) => {
                let artifacts = ctx
                    .written
                    .iter()
                    .map(|name| FileRecord::of_file(&out_dir.join(name), name.clone()))
                    .collect::<Result<Vec<_>, _>>()?;
                manifest.record(StageRecord {
                    stage,
                    status: StageStatus::Ok,
                    wall_ms,
                    inputs: ctx.inputs,
                    artifacts,
                    error: None,
                });
                manifest.write(out_dir)?;
                log::info!("stage {stage}: ok in {wall_ms} ms");
            }
            Err(message) => {
                let mut artifacts = Vec::new();
                for name in &ctx.written {
                    let partial = format!("{name}.partial");
                    let to = out_dir.join(&partial);
                    fs::rename(out_dir.join(name), &to).map_err(|e| HarnessError::io(&to, e))?;
                    artifacts.push(FileRecord::of_file(&to, partial)?);
                }
                manifest.record(StageRecord {
                    stage,
                    status: StageStatus::Failed,
                    wall_ms,
                    inputs: ctx.inputs,
                    artifacts,
                    error: Some(message.clone()),
                });
                manifest.write(out_dir)?;
                log::error!("stage {stage} failed: {message}");
                return Err(HarnessError::Stage { stage: stage.name().into(), message });
            }
        }
    }
    Ok(manifest)
}
