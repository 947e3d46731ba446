//! Batch command-line front end: every subcommand runs pipeline stages from
//! one TOML config and exits 0, 2 (config or validation) or 3 (runtime).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polilab::harness::{self, ExperimentConfig, HarnessError, Stage};

#[derive(Debug, Parser)]
#[command(name = "polilab", version, about = "Synthetic political-process pipelines: generate, learn, explain, intervene")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate,
    /// Build graphs and an event log from record tables.
    Featurize,
    /// Split a dataset into train, validation and test files.
    Split,
    /// Train a graph or sequence model.
    Train,
    /// Score a trained model.
    Eval,
    /// Permutation importance and substructure extraction.
    Explain,
    /// Fit a Hawkes process and infer edges.
    HawkesFit,
    /// Rank interventions under a trained model.
    Attack,
    /// Choose an edge removal against single-edge additions.
    Defend,
    /// Verify checksums and write report.txt and report.csv.
    Report,
    /// Run every stage listed in the config.
    Run,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Generate => Stage::Generate,
            Command::Featurize => Stage::Featurize,
            Command::Split => Stage::Split,
            Command::Train => Stage::Train,
            Command::Eval => Stage::Eval,
            Command::Explain => Stage::Explain,
            Command::HawkesFit => Stage::HawkesFit,
            Command::Attack => Stage::Attack,
            Command::Defend => Stage::Defend,
            Command::Report | Command::Run => return None,
        })
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match (&cli.config, cli.seed) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(seed)) => ExperimentConfig::with_seed(seed),
        (None, None) => return Err(HarnessError::Config("pass --config or --seed".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, HarnessError> {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .ok_or_else(|| HarnessError::Config("no output directory: pass --out or set out_dir".into()))
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    if let Command::Report = cli.command {
        let cfg = match &cli.config {
            Some(p) => Some(ExperimentConfig::load(p)?),
            None => None,
        };
        let dir = out_dir(cli, cfg.as_ref())?;
        let r = harness::write_report(&dir)?;
        print!("{}", r.text);
        return Ok(());
    }
    let mut cfg = load_config(cli)?;
    if let Some(stage) = cli.command.stage() {
        cfg.stages = vec![stage];
    }
    let dir = out_dir(cli, Some(&cfg))?;
    let manifest = harness::run(&cfg, &dir)?;
    log::info!("{} stage(s) recorded in {}", manifest.stages.len(), dir.join(harness::MANIFEST_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
