use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::manifest::sha256_hex;
use super::HarnessError;
use crate::featurize::SplitKind;
use crate::graphlearn::Task;
use crate::ppnet::HawkesFitConfig;
use crate::seqlearn::Supervision;
use crate::synthgen::{GraphGenConfig, HawkesParams, SeqGenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Generate,
    Featurize,
    Split,
    Train,
    Eval,
    Explain,
    HawkesFit,
    Attack,
    Defend,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Generate,
        Stage::Featurize,
        Stage::Split,
        Stage::Train,
        Stage::Eval,
        Stage::Explain,
        Stage::HawkesFit,
        Stage::Attack,
        Stage::Defend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Featurize => "featurize",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Explain => "explain",
            Stage::HawkesFit => "hawkes-fit",
            Stage::Attack => "attack",
            Stage::Defend => "defend",
        }
    }

    /// Files a successful run of this stage always leaves in the output directory.
    pub(crate) fn produces(self) -> &'static [&'static str] {
        match self {
            Stage::Generate | Stage::Featurize => &["dataset.ndjson"],
            Stage::Split => &["train.ndjson", "val.ndjson", "test.ndjson"],
            Stage::Train => &["model.json", "history.csv"],
            Stage::Eval => &["metrics.json"],
            Stage::Explain => &["importance.csv"],
            Stage::HawkesFit => &["hawkes.json", "hawkes_trajectory.csv", "hawkes_fit.json", "edges.ndjson"],
            Stage::Attack => &["attack.json"],
            Stage::Defend => &["defense.json"],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerateKind {
    #[default]
    Graphs,
    Sequences,
    PointProcess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HawkesStage {
    pub mu: Vec<f64>,
    /// Row-major `n x n` excitation matrix.
    pub w: Vec<f64>,
    pub beta: f64,
    pub horizon: f64,
    pub force: bool,
}

impl Default for HawkesStage {
    fn default() -> Self {
        Self { mu: vec![0.1; 2], w: vec![0.0, 0.5, 0.0, 0.0], beta: 1.0, horizon: 100.0, force: false }
    }
}

impl HawkesStage {
    pub fn params(&self) -> HawkesParams {
        HawkesParams::new(self.mu.clone(), self.w.clone(), self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateStage {
    pub kind: GenerateKind,
    pub graphs: GraphGenConfig,
    pub sequences: SeqGenConfig,
    /// Number of sequences for `kind = "sequences"`.
    pub count: usize,
    pub hawkes: HawkesStage,
}

impl Default for GenerateStage {
    fn default() -> Self {
        Self {
            kind: GenerateKind::Graphs,
            graphs: GraphGenConfig::default(),
            sequences: SeqGenConfig::default(),
            count: 100,
            hawkes: HawkesStage::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizeStage {
    /// Directory of record tables.
    pub records: Option<PathBuf>,
    /// Actor order for the event log; all members by id when unset.
    pub roster: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitStage {
    pub input: Option<PathBuf>,
    pub kind: SplitKind,
    pub fractions: [f64; 3],
    /// Z-score graph features with train statistics.
    pub normalize: bool,
}

impl Default for SplitStage {
    fn default() -> Self {
        Self { input: None, kind: SplitKind::ByGraphRandom, fractions: [0.6, 0.2, 0.2], normalize: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainStage {
    pub input: Option<PathBuf>,
    pub val: Option<PathBuf>,
    /// Graph task; eval and explain score the same task.
    pub task: Task,
    pub layers: usize,
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub negative_ratio: f64,
    pub supervision: Supervision,
    pub next_event_weight: f64,
    pub binary_y: bool,
}

impl Default for TrainStage {
    fn default() -> Self {
        Self {
            input: None,
            val: None,
            task: Task::GraphLabel,
            layers: 2,
            hidden: 16,
            lr: 0.05,
            epochs: 200,
            negative_ratio: 1.0,
            supervision: Supervision::EveryStep,
            next_event_weight: 1.0,
            binary_y: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalStage {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Fraction of edges held out for the link task.
    pub holdout_fraction: f64,
}

impl Default for EvalStage {
    fn default() -> Self {
        Self { input: None, model: None, holdout_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainStage {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub repeats: usize,
    /// Graph-label column for substructure extraction.
    pub column: usize,
    /// Edges kept by substructure extraction.
    pub budget: usize,
    /// Position of the explained graph in the data file.
    pub graph: usize,
}

impl Default for ExplainStage {
    fn default() -> Self {
        Self { input: None, model: None, repeats: 5, column: 0, budget: 3, graph: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HawkesFitStage {
    pub input: Option<PathBuf>,
    /// Planted parameters checkpoint for scoring recovery.
    pub truth: Option<PathBuf>,
    pub beta: f64,
    pub lambda_reg: f64,
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub mu_min: f64,
    /// Edge threshold on the fitted excitation matrix.
    pub tau: f64,
}

impl Default for HawkesFitStage {
    fn default() -> Self {
        let f = HawkesFitConfig::default();
        Self {
            input: None,
            truth: None,
            beta: f.beta,
            lambda_reg: f.lambda_reg,
            step: f.step,
            max_iter: f.max_iter,
            tol: f.tol,
            mu_min: f.mu_min,
            tau: 0.1,
        }
    }
}

impl HawkesFitStage {
    pub fn fit_config(&self, seed: u64) -> HawkesFitConfig {
        HawkesFitConfig {
            beta: self.beta,
            lambda_reg: self.lambda_reg,
            step: self.step,
            max_iter: self.max_iter,
            tol: self.tol,
            mu_min: self.mu_min,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackStage {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub outcome: usize,
    pub graph: usize,
    /// Absent pairs considered as additions, in `(src, dst)` order.
    pub max_candidates: usize,
    /// Edge features of added edges; a unit first column when unset.
    pub candidate_features: Option<Vec<f64>>,
    pub top_k: usize,
    /// Portfolio budget in node-count units.
    pub budget: u64,
    pub horizon: usize,
    pub beam_width: usize,
    /// Sequence-model action space; single actors plus the empty action when unset.
    pub actions: Option<Vec<Vec<f64>>>,
}

impl Default for AttackStage {
    fn default() -> Self {
        Self {
            input: None,
            model: None,
            outcome: 0,
            graph: 0,
            max_candidates: 50,
            candidate_features: None,
            top_k: 5,
            budget: 100,
            horizon: 3,
            beam_width: 8,
            actions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefendStage {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub outcome: usize,
    pub graph: usize,
    /// Existing edges considered for removal, in stored order.
    pub removals: usize,
    /// Absent pairs the attacker may add, in `(src, dst)` order.
    pub additions: usize,
    pub candidate_features: Option<Vec<f64>>,
}

impl Default for DefendStage {
    fn default() -> Self {
        Self { input: None, model: None, outcome: 0, graph: 0, removals: 5, additions: 10, candidate_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub generate: GenerateStage,
    #[serde(default)]
    pub featurize: FeaturizeStage,
    #[serde(default)]
    pub split: SplitStage,
    #[serde(default)]
    pub train: TrainStage,
    #[serde(default)]
    pub eval: EvalStage,
    #[serde(default)]
    pub explain: ExplainStage,
    #[serde(default, rename = "hawkes-fit")]
    pub hawkes_fit: HawkesFitStage,
    #[serde(default)]
    pub attack: AttackStage,
    #[serde(default)]
    pub defend: DefendStage,
}

/// One input a stage needs: an explicit path or the first default name
/// available in the output directory.
pub(crate) struct Requirement<'a> {
    pub what: &'static str,
    pub explicit: Option<&'a Path>,
    pub defaults: &'static [&'static str],
    pub optional: bool,
}

impl ExperimentConfig {
    /// Every block at its defaults.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            out_dir: None,
            stages: Vec::new(),
            generate: GenerateStage::default(),
            featurize: FeaturizeStage::default(),
            split: SplitStage::default(),
            train: TrainStage::default(),
            eval: EvalStage::default(),
            explain: ExplainStage::default(),
            hawkes_fit: HawkesFitStage::default(),
            attack: AttackStage::default(),
            defend: DefendStage::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the compact JSON form of the config.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub(crate) fn requirements(&self, stage: Stage) -> Vec<Requirement<'_>> {
        fn req<'a>(
            what: &'static str,
            explicit: &'a Option<PathBuf>,
            defaults: &'static [&'static str],
            optional: bool,
        ) -> Requirement<'a> {
            Requirement { what, explicit: explicit.as_deref(), defaults, optional }
        }
        const DATA: &[&str] = &["test.ndjson", "dataset.ndjson"];
        const MODEL: &[&str] = &["model.json"];
        match stage {
            Stage::Generate => Vec::new(),
            Stage::Featurize => vec![req("records directory", &self.featurize.records, &[], false)],
            Stage::Split => vec![req("dataset", &self.split.input, &["dataset.ndjson"], false)],
            Stage::Train => vec![
                req("training data", &self.train.input, &["train.ndjson", "dataset.ndjson"], false),
                req("validation data", &self.train.val, &["val.ndjson"], true),
            ],
            Stage::Eval => vec![req("model", &self.eval.model, MODEL, false), req("data", &self.eval.input, DATA, false)],
            Stage::Explain => {
                vec![req("model", &self.explain.model, MODEL, false), req("data", &self.explain.input, DATA, false)]
            }
            Stage::HawkesFit => vec![
                req("point-process data", &self.hawkes_fit.input, &["dataset.ndjson"], false),
                req("planted parameters", &self.hawkes_fit.truth, &["hawkes_truth.json"], true),
            ],
            Stage::Attack => {
                vec![req("model", &self.attack.model, MODEL, false), req("data", &self.attack.input, DATA, false)]
            }
            Stage::Defend => {
                vec![req("model", &self.defend.model, MODEL, false), req("data", &self.defend.input, DATA, false)]
            }
        }
    }

    fn check_blocks(&self) -> Result<(), HarnessError> {
        let bad = |stage: Stage, msg: String| Err(HarnessError::Validation(format!("[{stage}] {msg}")));
        for &stage in &self.stages {
            match stage {
                Stage::Generate => {
                    let g = &self.generate;
                    let res = match g.kind {
                        GenerateKind::Graphs => g.graphs.validate(),
                        GenerateKind::Sequences => g.sequences.validate(),
                        GenerateKind::PointProcess => {
                            if !(g.hawkes.horizon.is_finite() && g.hawkes.horizon > 0.0) {
                                return bad(stage, format!("horizon {} must be positive", g.hawkes.horizon));
                            }
                            let p = g.hawkes.params();
                            p.validate().and_then(|_| {
                                if p.is_supercritical() && !g.hawkes.force {
                                    Err(crate::synthgen::SynthError::Supercritical { max_row_sum: p.max_row_sum() })
                                } else {
                                    Ok(())
                                }
                            })
                        }
                    };
                    if let Err(e) = res {
                        return bad(stage, e.to_string());
                    }
                }
                Stage::Split => {
                    let f = self.split.fractions;
                    if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                        return bad(stage, format!("fractions {f:?} must be positive and sum to 1"));
                    }
                }
                Stage::Train => {
                    let t = &self.train;
                    if t.hidden == 0 || !(t.lr.is_finite() && t.lr >= 0.0) {
                        return bad(stage, "hidden must be positive and lr non-negative".into());
                    }
                }
                Stage::Eval => {
                    if !(0.0..1.0).contains(&self.eval.holdout_fraction) {
                        return bad(stage, format!("holdout_fraction {} must lie in [0, 1)", self.eval.holdout_fraction));
                    }
                }
                Stage::HawkesFit => {
                    if let Err(e) = self.hawkes_fit.fit_config(0).validate() {
                        return bad(stage, e.to_string());
                    }
                    if !(self.hawkes_fit.tau >= 0.0) {
                        return bad(stage, format!("tau {} must be non-negative", self.hawkes_fit.tau));
                    }
                }
                Stage::Attack => {
                    if self.attack.horizon == 0 || self.attack.beam_width == 0 {
                        return bad(stage, "horizon and beam_width must be at least 1".into());
                    }
                }
                Stage::Featurize | Stage::Explain | Stage::Defend => {}
            }
        }
        Ok(())
    }

    /// Checks the stage list and every stage input before anything runs.
    ///
    /// An input is satisfied by an explicit path that exists, by a file an
    /// earlier stage of this run produces, or by a file already present in
    /// `out_dir`.
    pub fn validate(&self, out_dir: &Path) -> Result<(), HarnessError> {
        if self.stages.is_empty() {
            return Err(HarnessError::Validation("no stages listed".into()));
        }
        for (k, s) in self.stages.iter().enumerate() {
            if self.stages[..k].contains(s) {
                return Err(HarnessError::Validation(format!("stage {s} listed twice")));
            }
        }
        self.check_blocks()?;
        for (k, &stage) in self.stages.iter().enumerate() {
            let earlier: Vec<&str> = self.stages[..k].iter().flat_map(|s| s.produces().iter().copied()).collect();
            let produced_here = |p: &Path| {
                p.parent() == Some(out_dir)
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| earlier.contains(&n))
            };
            for r in self.requirements(stage) {
                let ok = match r.explicit {
                    Some(p) => p.exists() || produced_here(p),
                    None => {
                        r.optional
                            || r.defaults.iter().any(|d| earlier.contains(d) || out_dir.join(d).exists())
                    }
                };
                if !ok {
                    let hint = match r.explicit {
                        Some(p) => format!("{} does not exist", p.display()),
                        None if r.defaults.is_empty() => "no path configured".into(),
                        None => format!("none of {:?} is produced earlier or present in the output directory", r.defaults),
                    };
                    return Err(HarnessError::Validation(format!("stage {stage} needs {}: {hint}", r.what)));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip_through_toml_and_from_str() {
        let c = ExperimentConfig::from_toml("seed = 3\nstages = [\"hawkes-fit\", \"eval\"]\n[hawkes-fit]\ntau = 0.2\n")
            .unwrap();
        assert_eq!(c.stages, [Stage::HawkesFit, Stage::Eval]);
        assert_eq!(c.hawkes_fit.tau, 0.2);
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
        assert!("fit".parse::<Stage>().is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = ExperimentConfig::with_seed(1);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.train.lr = 0.01;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn later_stages_see_earlier_outputs() {
        let dir = Path::new("/nonexistent-polilab-dir");
        let mut c = ExperimentConfig::with_seed(1);
        c.stages = vec![Stage::Generate, Stage::Split, Stage::Train, Stage::Eval, Stage::Attack];
        c.validate(dir).unwrap();
        c.stages = vec![Stage::Generate, Stage::Eval];
        assert!(matches!(c.validate(dir), Err(HarnessError::Validation(m)) if m.contains("model")));
        c.stages = vec![Stage::Generate, Stage::HawkesFit];
        c.validate(dir).unwrap();
    }
}
