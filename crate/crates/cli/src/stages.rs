//! Stage bodies. Inputs come from the work directory or the data root,
//! outputs go to the work directory, and every report echoes the effective
//! configuration and its hash.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pagforge_adjudication::CandidateInput;
use pagforge_core::chem::{parse_smiles, Molecule};
use pagforge_core::dataset::{self, filter_window, keep_cations, label_lumo, Compound, OnError, PropertyWindow, Record, Vocabulary, DEFAULT_MAX_LEN};
use pagforge_core::descriptors::{morgan_fingerprint, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH};
use pagforge_core::metrics::{compute_report, render_table, MetricsConfig};
use pagforge_core::screening::{chem_filters, dice_histogram, is_sulfonium, scaffold_summary, similarity_binning, BinningConfig, FilterConfig, FilterRule};
use pagforge_model::classifier::{train_classifier, ClassifierConfig, LatentClassifier};
use pagforge_model::gmm::{self, GaussianMixture, GmmConfig};
use pagforge_model::sampler::{class_sample, AttributeSpec, Polarity, SamplerConfig};
use pagforge_model::vae::{self, DecodeMode, Noise, TrainConfig, Vae, VaeConfig};
use pagforge_model::{derive_seed, Container, Tensor};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{config, require, CliError, Ctx, Outcome};

pub const REFERENCE_FILE: &str = "pag_reference.csv";
pub const CORPUS_FILE: &str = "minizinc.smi";

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(CliError::stage)?;
    s.push('\n');
    write_text(path, &s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

fn read_compounds(path: &Path) -> Result<Vec<Compound>, CliError> {
    dataset::ingest(path, OnError::Skip).map(|(c, _)| c).map_err(CliError::stage)
}

fn write_compounds<'a>(path: &Path, rows: impl IntoIterator<Item = &'a Compound>) -> Result<(), CliError> {
    let mut s = String::from("smiles,id,lumo_ev\n");
    for c in rows {
        let lumo = c.record.lumo_ev.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", c.canonical, c.record.id, lumo);
    }
    write_text(path, &s)
}

fn report<C: Serialize>(cfg: &C, seed: Option<u64>, body: Value) -> Value {
    let mut v = json!({ "config": cfg, "config_hash": config::hash(cfg), "seed": seed });
    if let (Some(o), Value::Object(b)) = (v.as_object_mut(), body) {
        o.extend(b);
    }
    v
}

fn outcome<C: Serialize>(cfg: &C, inputs: Vec<PathBuf>, outputs: Vec<PathBuf>, summary: String) -> Outcome {
    Outcome {
        config: serde_json::to_value(cfg).expect("config serializes"),
        inputs,
        outputs,
        summary,
    }
}

fn fingerprints(mols: &[&Molecule], radius: u32, width: usize) -> Result<Vec<Fingerprint>, CliError> {
    mols.iter()
        .map(|m| morgan_fingerprint(m, radius, width).map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub fail_on_parse_error: bool,
    pub cations_only: bool,
    pub drop_duplicates: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            fail_on_parse_error: false,
            cations_only: true,
            drop_duplicates: true,
        }
    }
}

pub fn ingest(ctx: &Ctx, input: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let cfg: IngestConfig = config::load(file, overrides)?;
    let input = require(&input.unwrap_or_else(|| ctx.data(CORPUS_FILE)))?;
    let on_error = if cfg.fail_on_parse_error { OnError::Fail } else { OnError::Skip };
    let (compounds, rep) = dataset::ingest(&input, on_error).map_err(CliError::stage)?;
    let parsed = compounds.len();
    let mut seen = HashSet::new();
    let unique: Vec<Compound> = compounds
        .into_iter()
        .filter(|c| !cfg.drop_duplicates || seen.insert(c.canonical.clone()))
        .collect();
    let duplicates_dropped = parsed - unique.len();
    let before = unique.len();
    let kept = if cfg.cations_only { keep_cations(unique) } else { unique };
    let out_csv = ctx.path("ingested.csv");
    let out_report = ctx.path("ingest_report.json");
    write_compounds(&out_csv, &kept)?;
    write_json(
        &out_report,
        &report(
            &cfg,
            None,
            json!({
                "input": input.display().to_string(),
                "ingest": rep,
                "duplicates_dropped": duplicates_dropped,
                "non_cations_dropped": before - kept.len(),
                "kept": kept.len(),
            }),
        ),
    )?;
    let summary = format!("{} cations kept of {parsed} parsed records ({} unparsable)", kept.len(), rep.skipped.len());
    Ok(outcome(&cfg, vec![input], vec![out_csv, out_report], summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterStageConfig {
    pub window: PropertyWindow,
}

impl Default for FilterStageConfig {
    fn default() -> Self {
        FilterStageConfig {
            window: PropertyWindow::table1(),
        }
    }
}

pub fn filter(ctx: &Ctx, window: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: FilterStageConfig = config::load(file, overrides)?;
    let input = require(&ctx.path("ingested.csv"))?;
    let mut inputs = vec![input.clone()];
    if let Some(w) = window {
        let w = require(&w)?;
        cfg.window = PropertyWindow::load(&w).map_err(|e| CliError::Config(e.to_string()))?;
        inputs.push(w);
    }
    cfg.window.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let (kept, rep) = filter_window(read_compounds(&input)?, &cfg.window);
    let out_csv = ctx.path("filtered.csv");
    let out_report = ctx.path("filter_report.json");
    write_compounds(&out_csv, &kept)?;
    write_json(&out_report, &report(&cfg, None, json!({ "report": rep })))?;
    let mut summary = format!("{} of {} kept", rep.kept, rep.input);
    for (rule, n) in &rep.dropped_by_rule {
        let _ = write!(summary, "; {} {n}", serde_json::to_value(rule).unwrap().as_str().unwrap_or(""));
    }
    Ok(outcome(&cfg, inputs, vec![out_csv, out_report], summary))
}

/// Network sizes; the vocabulary size comes from the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub latent_dim: usize,
    pub aux_hidden: usize,
    pub aux_layers: usize,
    pub dropout_permille: u32,
    pub fp_bits: usize,
    pub fp_radius: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let v = VaeConfig::new(1);
        ModelConfig {
            embed_dim: v.embed_dim,
            hidden: v.hidden,
            latent_dim: v.latent_dim,
            aux_hidden: v.aux_hidden,
            aux_layers: v.aux_layers,
            dropout_permille: v.dropout_permille,
            fp_bits: v.fp_bits,
            fp_radius: v.fp_radius,
        }
    }
}

impl ModelConfig {
    pub fn with_vocab(&self, vocab_size: usize) -> VaeConfig {
        VaeConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            hidden: self.hidden,
            latent_dim: self.latent_dim,
            aux_hidden: self.aux_hidden,
            aux_layers: self.aux_layers,
            dropout_permille: self.dropout_permille,
            fp_bits: self.fp_bits,
            fp_radius: self.fp_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainVaeConfig {
    /// Leading molecules of the filtered corpus to use.
    pub max_molecules: Option<usize>,
    pub include_reference: bool,
    pub max_len: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for TrainVaeConfig {
    fn default() -> Self {
        TrainVaeConfig {
            max_molecules: None,
            include_reference: true,
            max_len: DEFAULT_MAX_LEN,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

pub fn train_vae(ctx: &Ctx, seed: u64, reference: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: TrainVaeConfig = config::load(file, overrides)?;
    cfg.train.seed = seed;
    cfg.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let filtered = require(&ctx.path("filtered.csv"))?;
    let reference = require(&reference.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;

    let mut zinc = read_compounds(&filtered)?;
    if let Some(n) = cfg.max_molecules {
        zinc.truncate(n);
    }
    let refs = if cfg.include_reference { read_compounds(&reference)? } else { Vec::new() };
    let (n_zinc, n_ref) = (zinc.len(), refs.len());
    let mut seen = HashSet::new();
    let corpus: Vec<Compound> = zinc.into_iter().chain(refs).filter(|c| seen.insert(c.canonical.clone())).collect();
    if corpus.is_empty() {
        return Err(CliError::Stage("training corpus is empty".into()));
    }
    let vocab = Vocabulary::build(corpus.iter().map(|c| c.canonical.as_str()), cfg.max_len).map_err(CliError::stage)?;
    let vcfg = cfg.model.with_vocab(vocab.len());
    vcfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let model = Vae::new(vcfg, vocab, derive_seed(seed, "init")).map_err(CliError::stage)?;

    let mut samples = Vec::new();
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for c in &corpus {
        match model.sample(&c.canonical) {
            Ok(s) => {
                samples.push(s);
                used.push(c);
            }
            Err(e) => skipped.push(json!({ "id": c.record.id, "smiles": c.canonical, "error": e.to_string() })),
        }
    }
    let (model, rep) = vae::train(model, &samples, &cfg.train).map_err(CliError::stage)?;

    let ckpt = ctx.path("vae.ckpt");
    let corpus_csv = ctx.path("corpus.csv");
    let out_report = ctx.path("train_report.json");
    model.to_container().save(&ckpt).map_err(CliError::stage)?;
    write_compounds(&corpus_csv, used.iter().copied())?;
    let steps_per_epoch = rep.history.len().checked_div(rep.epochs_run).unwrap_or(0).max(1);
    let epoch_loss: Vec<f64> = rep
        .history
        .chunks(steps_per_epoch)
        .map(|c| c.iter().map(|s| s.parts.total).sum::<f64>() / c.len() as f64)
        .collect();
    write_json(
        &out_report,
        &report(
            &cfg,
            Some(seed),
            json!({
                "corpus": { "filtered": n_zinc, "reference": n_ref, "unique": corpus.len(), "used": samples.len(), "skipped": skipped },
                "vocab_size": model.vocabulary().len(),
                "parameters": model.layout().total(),
                "model_hash": model.config_hash(),
                "result": rep.summary(),
                "epoch_accuracy": rep.epoch_accuracy,
                "epoch_loss": epoch_loss,
            }),
        ),
    )?;
    let summary = format!(
        "{} molecules, {} epochs, teacher-forced accuracy {:.3}",
        samples.len(),
        rep.epochs_run,
        rep.final_accuracy
    );
    Ok(outcome(&cfg, vec![filtered, reference], vec![ckpt, corpus_csv, out_report], summary))
}

fn load_vae(path: &Path) -> Result<Vae, CliError> {
    let c = Container::load(path).map_err(CliError::stage)?;
    Vae::from_container(&c).map_err(CliError::stage)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    /// Also store one posterior draw per molecule.
    pub include_sampled: bool,
}

pub const LATENTS_KIND: &str = "latents";

/// Latent means with their molecule ids, SMILES and optional LUMO values.
#[derive(Debug, Clone, PartialEq)]
pub struct Latents {
    pub ids: Vec<String>,
    pub smiles: Vec<String>,
    pub lumo_ev: Vec<Option<f64>>,
    pub mu: Vec<Vec<f64>>,
}

pub fn load_latents(path: &Path) -> Result<Latents, CliError> {
    let c = Container::load(path).map_err(CliError::stage)?;
    c.expect_kind(LATENTS_KIND).map_err(CliError::stage)?;
    let field = |k: &str| -> Result<Value, CliError> {
        c.meta.get(k).cloned().ok_or_else(|| CliError::Stage(format!("{}: missing {k}", path.display())))
    };
    let ids: Vec<String> = serde_json::from_value(field("ids")?).map_err(CliError::stage)?;
    let smiles: Vec<String> = serde_json::from_value(field("smiles")?).map_err(CliError::stage)?;
    let lumo_ev: Vec<Option<f64>> = serde_json::from_value(field("lumo_ev")?).map_err(CliError::stage)?;
    let t = c.tensor("mu").map_err(CliError::stage)?;
    let d = t.shape.get(1).copied().unwrap_or(0);
    let mu: Vec<Vec<f64>> = if d == 0 { Vec::new() } else { t.to_f64().chunks(d).map(<[f64]>::to_vec).collect() };
    if mu.len() != ids.len() {
        return Err(CliError::Stage(format!("{}: {} ids for {} latents", path.display(), ids.len(), mu.len())));
    }
    Ok(Latents { ids, smiles, lumo_ev, mu })
}

pub fn encode(ctx: &Ctx, seed: u64, input: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let cfg: EncodeConfig = config::load(file, overrides)?;
    let ckpt = require(&ctx.path("vae.ckpt"))?;
    let input = require(&input.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;
    let model = load_vae(&ckpt)?;
    let l = model.latent_dim();
    let (mut ids, mut smiles, mut lumo) = (Vec::new(), Vec::new(), Vec::new());
    let (mut mu, mut sigma, mut z) = (Vec::new(), Vec::new(), Vec::new());
    let mut skipped = Vec::new();
    for c in read_compounds(&input)? {
        match model.encode(&c.canonical, Noise::Mean) {
            Ok(e) => {
                mu.extend_from_slice(&e.mu);
                sigma.extend_from_slice(&e.sigma);
                if cfg.include_sampled {
                    let d = model
                        .encode(&c.canonical, Noise::Seeded(derive_seed(seed, &c.record.id)))
                        .map_err(CliError::stage)?;
                    z.extend_from_slice(&d.z);
                }
                ids.push(c.record.id);
                smiles.push(c.canonical);
                lumo.push(c.record.lumo_ev);
            }
            Err(e) => skipped.push(json!({ "id": c.record.id, "smiles": c.canonical, "error": e.to_string() })),
        }
    }
    if ids.is_empty() {
        return Err(CliError::Stage(format!("nothing in {} could be encoded", input.display())));
    }
    let n = ids.len();
    let mut c = Container::new(
        LATENTS_KIND,
        json!({
            "config": cfg,
            "source": input.display().to_string(),
            "vae_hash": model.config_hash(),
            "ids": ids,
            "smiles": smiles,
            "lumo_ev": lumo,
            "skipped": skipped,
        }),
    );
    c.push(Tensor::from_f64("mu", vec![n, l], &mu));
    c.push(Tensor::from_f64("sigma", vec![n, l], &sigma));
    if cfg.include_sampled {
        c.push(Tensor::from_f64("z", vec![n, l], &z));
    }
    let out = ctx.path("latents.ckpt");
    c.save(&out).map_err(CliError::stage)?;
    let summary = format!("{n} molecules encoded to {l} dimensions, {} skipped", skipped.len());
    Ok(outcome(&cfg, vec![ckpt, input], vec![out], summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitGmmConfig {
    pub gmm: GmmConfig,
    /// Fit only latents whose LUMO is at or below this value.
    pub lumo_max: Option<f64>,
}

impl Default for FitGmmConfig {
    fn default() -> Self {
        FitGmmConfig {
            gmm: GmmConfig::default(),
            lumo_max: None,
        }
    }
}

pub fn fit_gmm(ctx: &Ctx, seed: u64, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: FitGmmConfig = config::load(file, overrides)?;
    cfg.gmm.seed = seed;
    let input = require(&ctx.path("latents.ckpt"))?;
    let lat = load_latents(&input)?;
    let rows: Vec<Vec<f64>> = lat
        .mu
        .into_iter()
        .zip(&lat.lumo_ev)
        .filter(|(_, l)| cfg.lumo_max.is_none_or(|m| l.is_some_and(|l| l <= m)))
        .map(|(z, _)| z)
        .collect();
    let (g, rep) = gmm::fit_gmm(&rows, &cfg.gmm).map_err(CliError::stage)?;
    let ckpt = ctx.path("gmm.ckpt");
    let out_report = ctx.path("gmm_report.json");
    g.to_container(&rep).save(&ckpt).map_err(CliError::stage)?;
    let final_ll = rep.log_likelihood.last().copied();
    write_json(
        &out_report,
        &report(&cfg, Some(seed), json!({ "points": rows.len(), "components": g.components(), "final_mean_log_likelihood": final_ll, "fit": rep })),
    )?;
    let summary = format!(
        "{} components on {} latents, {} iterations, mean log-likelihood {:.3}",
        g.components(),
        rows.len(),
        rep.iterations,
        final_ll.unwrap_or(f64::NAN)
    );
    Ok(outcome(&cfg, vec![input], vec![ckpt, out_report], summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainClfConfig {
    pub threshold_ev: f64,
    pub classifier: ClassifierConfig,
}

impl Default for TrainClfConfig {
    fn default() -> Self {
        TrainClfConfig {
            threshold_ev: -5.0,
            classifier: ClassifierConfig::default(),
        }
    }
}

pub fn train_clf(ctx: &Ctx, seed: u64, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: TrainClfConfig = config::load(file, overrides)?;
    cfg.classifier.seed = seed;
    let input = require(&ctx.path("latents.ckpt"))?;
    let lat = load_latents(&input)?;
    let records: Vec<Record> = lat
        .ids
        .iter()
        .zip(&lat.smiles)
        .zip(&lat.lumo_ev)
        .map(|((id, s), l)| Record {
            smiles: s.clone(),
            id: id.clone(),
            lumo_ev: *l,
        })
        .collect();
    let labels = label_lumo(&records, cfg.threshold_ev).map_err(CliError::stage)?;
    let (clf, cv) = train_classifier(&lat.mu, &labels, &cfg.classifier).map_err(CliError::stage)?;
    let ckpt = ctx.path("clf.ckpt");
    let out_report = ctx.path("cv_report.json");
    let out_confusion = ctx.path("confusion.txt");
    clf.to_container(&cv, &cfg.classifier).save(&ckpt).map_err(CliError::stage)?;
    let positives = labels.iter().filter(|&&l| l).count();
    write_json(
        &out_report,
        &report(&cfg, Some(seed), json!({ "positives": positives, "negatives": labels.len() - positives, "cv": cv })),
    )?;
    let table = cv.render("high LUMO", "low LUMO");
    write_text(&out_confusion, &table)?;
    let summary = format!("{positives} of {} labelled low LUMO\n{table}", labels.len());
    Ok(outcome(&cfg, vec![input], vec![ckpt, out_report, out_confusion], summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleStageConfig {
    pub sampler: SamplerConfig,
    /// Softmax temperature for decoding; greedy when absent.
    pub temperature: Option<f64>,
}

impl Default for SampleStageConfig {
    fn default() -> Self {
        SampleStageConfig {
            sampler: SamplerConfig::default(),
            temperature: None,
        }
    }
}

/// One accepted latent after decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRow {
    pub id: String,
    pub lane: usize,
    pub index: usize,
    pub smiles: String,
    pub valid: bool,
    pub classifier_score: f64,
}

pub fn sample(ctx: &Ctx, seed: u64, trace: bool, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: SampleStageConfig = config::load(file, overrides)?;
    cfg.sampler.seed = seed;
    let vae_path = require(&ctx.path("vae.ckpt"))?;
    let gmm_path = require(&ctx.path("gmm.ckpt"))?;
    let clf_path = require(&ctx.path("clf.ckpt"))?;
    let model = load_vae(&vae_path)?;
    let (g, _) = GaussianMixture::from_container(&Container::load(&gmm_path).map_err(CliError::stage)?).map_err(CliError::stage)?;
    let (clf, _) = LatentClassifier::from_container(&Container::load(&clf_path).map_err(CliError::stage)?).map_err(CliError::stage)?;
    if g.dim() != model.latent_dim() || clf.dim != model.latent_dim() {
        return Err(CliError::Stage(format!(
            "latent dimensions disagree: autoencoder {}, mixture {}, classifier {}",
            model.latent_dim(),
            g.dim(),
            clf.dim
        )));
    }
    let mode = cfg.temperature.map_or(DecodeMode::Greedy, DecodeMode::Temperature);
    let decode_seed = derive_seed(seed, "decode");
    let decode = |z: &[f64]| model.decode(z, mode, decode_seed).unwrap_or_default();
    let valid = |s: &str| !s.is_empty() && parse_smiles(s).is_ok();
    let spec = AttributeSpec::single(&clf, Polarity::Positive);
    let run = class_sample(&g, &spec, &decode, &valid, &cfg.sampler).map_err(CliError::stage)?;

    let rows: Vec<GeneratedRow> = run
        .accepted
        .iter()
        .enumerate()
        .map(|(i, a)| GeneratedRow {
            id: format!("G{:06}", i + 1),
            lane: a.lane,
            index: a.index,
            smiles: a.decoded.clone(),
            valid: a.valid,
            classifier_score: clf.predict(&a.z),
        })
        .collect();
    let out_json = ctx.path("samples.json");
    let out_smi = ctx.path("samples.smi");
    let out_manifest = ctx.path("sample_manifest.json");
    write_json(&out_json, &rows)?;
    let mut smi = String::new();
    for r in rows.iter().filter(|r| r.valid) {
        let _ = writeln!(smi, "{}\t{}", r.smiles, r.id);
    }
    write_text(&out_smi, &smi)?;
    write_json(
        &out_manifest,
        &report(&cfg, Some(seed), json!({ "vae_hash": model.config_hash(), "run": run.manifest() })),
    )?;
    let mut outputs = vec![out_json, out_smi, out_manifest];
    if trace {
        let p = ctx.path("sample_trace.csv");
        let mut s = String::from("lane,index,acceptance_prob,uniform,accepted\n");
        for d in &run.draws {
            let _ = writeln!(s, "{},{},{},{},{}", d.lane, d.index, d.acceptance_prob, d.uniform, d.accepted);
        }
        write_text(&p, &s)?;
        outputs.push(p);
    }
    let summary = format!(
        "{} accepted of {} draws (rate {:.4}), {:.1}% valid",
        run.accepted.len(),
        run.total_draws,
        run.acceptance_rate,
        100.0 * run.validity_rate
    );
    Ok(outcome(&cfg, vec![vae_path, gmm_path, clf_path], outputs, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenConfig {
    pub filters: FilterConfig,
    pub binning: BinningConfig,
    pub fp_radius: u32,
    pub fp_width: usize,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            filters: FilterConfig::default(),
            binning: BinningConfig::default(),
            fp_radius: DEFAULT_RADIUS,
            fp_width: DEFAULT_WIDTH,
        }
    }
}

pub fn screen(ctx: &Ctx, seed: u64, reference: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let mut cfg: ScreenConfig = config::load(file, overrides)?;
    cfg.binning.seed = seed;
    let samples_path = require(&ctx.path("samples.json"))?;
    let corpus_path = require(&ctx.path("corpus.csv"))?;
    let reference = require(&reference.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;
    let rows: Vec<GeneratedRow> = read_json(&samples_path)?;
    let refs = read_compounds(&reference)?;
    let training: HashSet<String> = read_compounds(&corpus_path)?
        .into_iter()
        .chain(refs.iter().cloned())
        .map(|c| c.canonical)
        .collect();

    let inputs: Vec<(String, String)> = rows.iter().map(|r| (r.id.clone(), r.smiles.clone())).collect();
    let verdicts = chem_filters(&inputs, &training, &cfg.filters);
    let mut failed_by_rule: BTreeMap<FilterRule, usize> = BTreeMap::new();
    for v in &verdicts {
        for r in &v.failed_rules {
            *failed_by_rule.entry(*r).or_default() += 1;
        }
    }
    let passed: Vec<(&GeneratedRow, String)> = rows
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.passed)
        .map(|(r, v)| (r, v.canonical.clone().expect("passing verdicts are parsed")))
        .collect();
    let mut passed_csv = String::from("smiles,id,classifier_score\n");
    for (r, c) in &passed {
        let _ = writeln!(passed_csv, "{c},{},{}", r.id, r.classifier_score);
    }
    let mut seen = HashSet::new();
    let unique: Vec<&(&GeneratedRow, String)> = passed.iter().filter(|(_, c)| seen.insert(c.clone())).collect();

    let mut candidates = Vec::new();
    let mut binning = None;
    if !unique.is_empty() {
        let gen_mols: Vec<Molecule> = unique.iter().map(|(_, c)| parse_smiles(c).map_err(CliError::stage)).collect::<Result<_, _>>()?;
        let gfps = fingerprints(&gen_mols.iter().collect::<Vec<_>>(), cfg.fp_radius, cfg.fp_width)?;
        let rfps = fingerprints(&refs.iter().map(|c| &c.mol).collect::<Vec<_>>(), cfg.fp_radius, cfg.fp_width)?;
        let b = similarity_binning(&gfps, &rfps, &cfg.binning).map_err(CliError::stage)?;
        for &i in &b.selected {
            let (r, c) = unique[i];
            candidates.push(CandidateInput {
                id: r.id.clone(),
                smiles: c.clone(),
                classifier_score: r.classifier_score,
                max_ref_similarity: b.max_similarity[i],
            });
        }
        binning = Some(b);
    }

    let out_passed = ctx.path("passed.csv");
    let out_candidates = ctx.path("candidates.json");
    let out_verdicts = ctx.path("screen_verdicts.json");
    let out_report = ctx.path("screen_report.json");
    write_text(&out_passed, &passed_csv)?;
    write_json(&out_candidates, &candidates)?;
    write_json(&out_verdicts, &verdicts)?;
    write_json(
        &out_report,
        &report(
            &cfg,
            Some(seed),
            json!({
                "samples": rows.len(),
                "passed": passed.len(),
                "unique_passed": unique.len(),
                "failed_by_rule": failed_by_rule,
                "bins": binning.as_ref().map(|b| &b.bins),
                "excluded_exact": binning.as_ref().map_or(0, |b| b.excluded_exact.len()),
                "candidates": candidates.len(),
            }),
        ),
    )?;
    let summary = format!(
        "{} of {} samples pass the filters ({} unique), {} candidates selected",
        passed.len(),
        rows.len(),
        unique.len(),
        candidates.len()
    );
    Ok(outcome(
        &cfg,
        vec![samples_path, corpus_path, reference],
        vec![out_passed, out_candidates, out_verdicts, out_report],
        summary,
    ))
}

fn sulfonium_reference(refs: Vec<Compound>, lumo_below: Option<f64>) -> Vec<Compound> {
    refs.into_iter()
        .filter(|c| is_sulfonium(&c.mol))
        .filter(|c| lumo_below.is_none_or(|m| c.record.lumo_ev.is_some_and(|l| l < m)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsStageConfig {
    pub metrics: MetricsConfig,
    /// Reference molecules must have LUMO strictly below this value.
    pub reference_lumo_below: Option<f64>,
    /// Leading filtered-corpus molecules used for the comparison row.
    pub corpus_max: Option<usize>,
}

impl Default for MetricsStageConfig {
    fn default() -> Self {
        MetricsStageConfig {
            metrics: MetricsConfig::default(),
            reference_lumo_below: Some(-5.0),
            corpus_max: Some(1000),
        }
    }
}

pub fn metrics(ctx: &Ctx, reference: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let cfg: MetricsStageConfig = config::load(file, overrides)?;
    let passed_path = require(&ctx.path("passed.csv"))?;
    let filtered_path = require(&ctx.path("filtered.csv"))?;
    let corpus_path = require(&ctx.path("corpus.csv"))?;
    let reference = require(&reference.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;
    let gen = read_compounds(&passed_path)?;
    if gen.is_empty() {
        return Err(CliError::Stage("no generated molecule passed screening".into()));
    }
    let mut zinc = read_compounds(&filtered_path)?;
    if let Some(n) = cfg.corpus_max {
        zinc.truncate(n);
    }
    let refs = sulfonium_reference(read_compounds(&reference)?, cfg.reference_lumo_below);
    let train: HashSet<String> = read_compounds(&corpus_path)?.into_iter().map(|c| c.canonical).collect();
    let mols = |v: &[Compound]| v.iter().map(|c| c.mol.clone()).collect::<Vec<_>>();
    let rmols = mols(&refs);
    let mut reports = vec![compute_report("GEN", &mols(&gen), &rmols, Some(&train), &cfg.metrics).map_err(CliError::stage)?];
    if !zinc.is_empty() {
        reports.push(compute_report("ZINC", &mols(&zinc), &rmols, None, &cfg.metrics).map_err(CliError::stage)?);
    }
    let out_json = ctx.path("metrics.json");
    let out_txt = ctx.path("metrics.txt");
    write_json(&out_json, &report(&cfg, None, json!({ "reference_size": refs.len(), "reports": reports })))?;
    let table = render_table(&reports);
    write_text(&out_txt, &table)?;
    Ok(outcome(
        &cfg,
        vec![passed_path, filtered_path, corpus_path, reference],
        vec![out_json, out_txt],
        format!("against {} reference sulfoniums\n{table}", refs.len()),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaffoldsConfig {
    /// Restrict the reference to LUMO strictly below this value.
    pub reference_lumo_below: Option<f64>,
}

pub fn scaffolds(ctx: &Ctx, reference: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let cfg: ScaffoldsConfig = config::load(file, overrides)?;
    let cand_path = require(&ctx.path("candidates.json"))?;
    let reference = require(&reference.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;
    let cands: Vec<CandidateInput> = read_json(&cand_path)?;
    let gen: Vec<(String, Molecule)> = cands
        .iter()
        .map(|c| parse_smiles(&c.smiles).map(|m| (c.id.clone(), m)).map_err(CliError::stage))
        .collect::<Result<_, _>>()?;
    let refs = sulfonium_reference(read_compounds(&reference)?, cfg.reference_lumo_below);
    let summary = scaffold_summary(
        gen.iter().map(|(id, m)| (id.as_str(), m)),
        refs.iter().map(|c| (c.record.id.as_str(), &c.mol)),
    );
    let out_json = ctx.path("scaffold_summary.json");
    let out_txt = ctx.path("scaffolds.txt");
    write_json(&out_json, &report(&cfg, None, json!({ "summary": summary })))?;
    let mut text = summary.to_table();
    text.push('\n');
    for r in summary.sulfonium_records() {
        let _ = writeln!(text, "{}  {}  {}", r.scaffold, if r.is_novel { "novel" } else { "known" }, r.parents.join(" "));
    }
    write_text(&out_txt, &text)?;
    let msg = format!(
        "{} sulfonium scaffolds ({} novel) from {} candidates",
        summary.generated.sulfonium_scaffolds,
        summary.generated.novel_sulfonium_scaffolds.unwrap_or(0),
        summary.generated.molecules
    );
    Ok(outcome(&cfg, vec![cand_path, reference], vec![out_json, out_txt], msg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiceHistConfig {
    pub bin_width: f64,
    pub fp_radius: u32,
    pub fp_width: usize,
    pub sulfonium_only: bool,
}

impl Default for DiceHistConfig {
    fn default() -> Self {
        DiceHistConfig {
            bin_width: 0.05,
            fp_radius: DEFAULT_RADIUS,
            fp_width: DEFAULT_WIDTH,
            sulfonium_only: true,
        }
    }
}

pub fn dice_hist(ctx: &Ctx, input: Option<PathBuf>, file: Option<&Path>, overrides: &[String]) -> Result<Outcome, CliError> {
    let cfg: DiceHistConfig = config::load(file, overrides)?;
    if !(cfg.bin_width > 0.0 && cfg.bin_width <= 1.0) {
        return Err(CliError::Config(format!("bin_width {} outside (0, 1]", cfg.bin_width)));
    }
    let input = require(&input.unwrap_or_else(|| ctx.data(REFERENCE_FILE)))?;
    let mols: Vec<Compound> = read_compounds(&input)?
        .into_iter()
        .filter(|c| !cfg.sulfonium_only || is_sulfonium(&c.mol))
        .collect();
    let fps = fingerprints(&mols.iter().map(|c| &c.mol).collect::<Vec<_>>(), cfg.fp_radius, cfg.fp_width)?;
    let h = dice_histogram(&fps, cfg.bin_width).map_err(CliError::stage)?;
    let out_csv = ctx.path("dice_hist.csv");
    let out_json = ctx.path("dice_hist.json");
    write_text(&out_csv, &h.to_csv())?;
    let (lo, hi) = h.mode_range();
    write_json(
        &out_json,
        &report(
            &cfg,
            None,
            json!({ "input": input.display().to_string(), "molecules": mols.len(), "histogram": h, "mode_range": [lo, hi] }),
        ),
    )?;
    let summary = format!("{} molecules, {} pairs, mode [{lo:.2}, {hi:.2})", mols.len(), h.pairs);
    Ok(outcome(&cfg, vec![input], vec![out_csv, out_json], summary))
}
