//! Pipeline orchestration: one subcommand per stage, a manifest tying the
//! stages together, and a single master seed fanned out per stage.

pub mod config;
pub mod manifest;
pub mod stages;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use pagforge_model::derive_seed;
use serde_json::Value;
use thiserror::Error;

use manifest::{sha256_file, Manifest, StageRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Stage(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::Stage(format!("{}: {e}", path.display()))
    }

    pub fn stage(e: impl Display) -> Self {
        CliError::Stage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => 2,
            CliError::Config(_) => 3,
            CliError::Stage(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pagforge", version, about = "Sulfonium cation generation pipeline")]
pub struct Cli {
    /// Directory for stage artifacts and manifest.json.
    #[arg(long, global = true, default_value = "work")]
    pub work_dir: PathBuf,
    /// Root of the bundled data files.
    #[arg(long, global = true, env = "PAGFORGE_DATA_DIR", default_value = "data")]
    pub data_root: PathBuf,
    /// Master seed; stage seeds are derived from it and the stage name.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StageArgs {
    /// JSON file merged over the stage defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config value, e.g. `--set train.epochs=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a SMILES or CSV corpus, canonicalize, keep single cations.
    Ingest {
        /// Corpus file [default: <data-root>/minizinc.smi]
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Apply the property window to the ingested cations.
    Filter {
        /// Window file replacing the configured window.
        #[arg(long)]
        window: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Train the sequence autoencoder on the filtered corpus plus the reference set.
    TrainVae {
        /// Reference set [default: <data-root>/pag_reference.csv]
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Use at most this many filtered molecules.
        #[arg(long)]
        max_molecules: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Encode a molecule file to latent means.
    Encode {
        /// Molecules to encode [default: <data-root>/pag_reference.csv]
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Fit the latent Gaussian mixture.
    FitGmm {
        #[arg(long)]
        components: Option<usize>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Train the low-LUMO classifier on latents with cross-validation.
    TrainClf {
        /// LUMO threshold in eV; labels are positive at or below it.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Conditional rejection sampling and decoding.
    Sample {
        /// Number of accepted latents to collect.
        #[arg(long)]
        n: Option<usize>,
        /// Also write the per-draw audit to sample_trace.csv.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Chemistry filters and similarity binning; writes the candidate file.
    Screen {
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Distribution metrics against the low-LUMO sulfonium reference.
    Metrics {
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Scaffold accounting of the candidates against the reference.
    Scaffolds {
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Histogram of pairwise Dice distances.
    DiceHist {
        /// Molecules [default: <data-root>/pag_reference.csv]
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        bin_width: Option<f64>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Serve the adjudication API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::Ipv4Addr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory with candidates.json and labels.ndjson [default: work dir]
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

pub struct Ctx {
    pub work: PathBuf,
    pub data_root: PathBuf,
    pub master_seed: u64,
}

impl Ctx {
    pub fn path(&self, name: &str) -> PathBuf {
        self.work.join(name)
    }

    pub fn data(&self, name: &str) -> PathBuf {
        self.data_root.join(name)
    }

    pub fn seed(&self, stage: &str) -> u64 {
        derive_seed(self.master_seed, stage)
    }
}

pub fn require(path: &Path) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

/// What a stage reports back for the manifest.
pub struct Outcome {
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn run_stage(
    ctx: &Ctx,
    name: &str,
    f: impl FnOnce(&Ctx, u64) -> Result<Outcome, CliError>,
) -> Result<StageRecord, CliError> {
    fs::create_dir_all(&ctx.work).map_err(|e| CliError::io(&ctx.work, e))?;
    let started = now();
    let seed = ctx.seed(name);
    let out = f(ctx, seed)?;
    let hashes = |v: &[PathBuf]| v.iter().map(|p| sha256_file(p)).collect::<Result<Vec<_>, _>>();
    let record = StageRecord {
        stage: name.to_string(),
        master_seed: ctx.master_seed,
        seed,
        config_hash: config::hash(&out.config),
        config: out.config,
        inputs: hashes(&out.inputs)?,
        outputs: hashes(&out.outputs)?,
        started,
        finished: now(),
    };
    let mut m = Manifest::load(&ctx.work)?;
    m.record(record.clone());
    m.save(&ctx.work)?;
    println!("{name}: {}", out.summary);
    Ok(record)
}

fn with(mut overrides: Vec<String>, extra: impl IntoIterator<Item = Option<String>>) -> Vec<String> {
    overrides.extend(extra.into_iter().flatten());
    overrides
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        work: cli.work_dir.clone(),
        data_root: cli.data_root.clone(),
        master_seed: cli.seed,
    };
    let cfg = |s: &StageArgs| s.config.clone();
    match cli.command {
        Command::Ingest { input, stage } => {
            run_stage(&ctx, "ingest", |c, _| stages::ingest(c, input, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::Filter { window, stage } => {
            run_stage(&ctx, "filter", |c, _| stages::filter(c, window, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::TrainVae {
            reference,
            max_molecules,
            epochs,
            stage,
        } => {
            let o = with(
                stage.overrides.clone(),
                [
                    max_molecules.map(|n| format!("max_molecules={n}")),
                    epochs.map(|n| format!("train.epochs={n}")),
                ],
            );
            run_stage(&ctx, "train-vae", |c, seed| stages::train_vae(c, seed, reference, cfg(&stage).as_deref(), &o))?;
        }
        Command::Encode { input, stage } => {
            run_stage(&ctx, "encode", |c, seed| stages::encode(c, seed, input, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::FitGmm { components, stage } => {
            let o = with(stage.overrides.clone(), [components.map(|k| format!("gmm.components={k}"))]);
            run_stage(&ctx, "fit-gmm", |c, seed| stages::fit_gmm(c, seed, cfg(&stage).as_deref(), &o))?;
        }
        Command::TrainClf { threshold, stage } => {
            let o = with(stage.overrides.clone(), [threshold.map(|t| format!("threshold_ev={t}"))]);
            run_stage(&ctx, "train-clf", |c, seed| stages::train_clf(c, seed, cfg(&stage).as_deref(), &o))?;
        }
        Command::Sample { n, trace, stage } => {
            let o = with(stage.overrides.clone(), [n.map(|n| format!("sampler.target_accepted={n}"))]);
            run_stage(&ctx, "sample", |c, seed| stages::sample(c, seed, trace, cfg(&stage).as_deref(), &o))?;
        }
        Command::Screen { reference, stage } => {
            run_stage(&ctx, "screen", |c, seed| stages::screen(c, seed, reference, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::Metrics { reference, stage } => {
            run_stage(&ctx, "metrics", |c, _| stages::metrics(c, reference, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::Scaffolds { reference, stage } => {
            run_stage(&ctx, "scaffolds", |c, _| stages::scaffolds(c, reference, cfg(&stage).as_deref(), &stage.overrides))?;
        }
        Command::DiceHist { input, bin_width, stage } => {
            let o = with(stage.overrides.clone(), [bin_width.map(|w| format!("bin_width={w}"))]);
            run_stage(&ctx, "dice-hist", |c, _| stages::dice_hist(c, input, cfg(&stage).as_deref(), &o))?;
        }
        Command::Serve {
            host,
            port,
            data_dir,
            candidates,
            labels,
        } => {
            let cfg = pagforge_adjudication::ServeConfig {
                host: host.octets(),
                port,
                data_dir: data_dir.unwrap_or_else(|| ctx.work.clone()),
                candidates,
                labels,
            };
            require(&cfg.candidates_path())?;
            let rt = tokio::runtime::Runtime::new().map_err(CliError::stage)?;
            rt.block_on(pagforge_adjudication::serve(cfg)).map_err(CliError::stage)?;
        }
    }
    Ok(())
}
