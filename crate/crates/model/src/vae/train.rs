use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{LossParts, LossWeights, Noise, Sample, Vae, VaeError};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub kl_max: f64,
    /// Fraction of all steps over which β rises linearly from 0 to `kl_max`.
    pub kl_anneal_fraction: f64,
    pub aux_weight: f64,
    pub logp_factor: f64,
    pub clip_norm: f64,
    pub seed: u64,
    /// Stop once teacher-forced accuracy (z = μ) reaches this value.
    pub stop_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 50,
            batch_size: 32,
            kl_max: 1.0,
            kl_anneal_fraction: 0.3,
            aux_weight: 1.0,
            logp_factor: 0.1,
            clip_norm: 5.0,
            seed: 0,
            stop_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VaeError> {
        let ok = self.lr > 0.0
            && self.batch_size > 0
            && self.kl_max >= 0.0
            && (0.0..=1.0).contains(&self.kl_anneal_fraction)
            && self.aux_weight >= 0.0
            && self.logp_factor >= 0.0
            && self.clip_norm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(VaeError::Config(format!("{self:?}")))
        }
    }

    pub fn beta(&self, step: usize, total_steps: usize) -> f64 {
        let ramp = (self.kl_anneal_fraction * total_steps as f64).ceil();
        if ramp <= 0.0 {
            self.kl_max
        } else {
            self.kl_max * (step as f64 / ramp).min(1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub beta: f64,
    pub grad_norm: f64,
    pub parts: LossParts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub steps: usize,
    pub epochs_run: usize,
    pub history: Vec<StepRecord>,
    pub epoch_accuracy: Vec<f64>,
    pub final_accuracy: f64,
    pub final_loss: LossParts,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "training": self.config,
            "steps": self.steps,
            "epochs_run": self.epochs_run,
            "final_accuracy": self.final_accuracy,
            "final_loss": self.final_loss,
            "stopped_early": self.stopped_early,
        })
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, p: &mut [f64], g: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
            let upd = lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
            p[i] = (p[i] - upd) as f32 as f64;
        }
    }
}

fn finite(p: &LossParts) -> bool {
    [p.total, p.recon, p.kl, p.logp, p.sa, p.fp].iter().all(|x| x.is_finite())
}

/// Mini-batch training; parameters are kept at f32 precision after every step.
pub fn train(mut vae: Vae, samples: &[Sample], cfg: &TrainConfig) -> Result<(Vae, TrainReport), VaeError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(VaeError::EmptyCorpus);
    }
    let per_epoch = samples.len().div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffle = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "vae-shuffle"));
    let noise_master = derive_seed(cfg.seed, "vae-noise");
    let mut adam = Adam {
        m: vec![0.0; vae.params.len()],
        v: vec![0.0; vae.params.len()],
        t: 0,
    };
    let mut history = Vec::with_capacity(total);
    let mut epoch_accuracy = Vec::new();
    let mut stopped_early = false;
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let (mut correct, mut tokens) = (0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let w = LossWeights {
                beta: cfg.beta(step, total),
                aux: cfg.aux_weight,
                logp_factor: cfg.logp_factor,
            };
            let noise = Noise::Seeded(noise_master ^ (step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let (parts, mut g) = vae.loss_and_grad(&batch, &w, noise);
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !finite(&parts) || !norm.is_finite() {
                return Err(VaeError::NonFinite { step, parts });
            }
            if norm > cfg.clip_norm {
                let f = cfg.clip_norm / norm;
                g.iter_mut().for_each(|x| *x *= f);
            }
            adam.step(&mut vae.params, &g, cfg.lr);
            correct += parts.correct;
            tokens += parts.tokens;
            history.push(StepRecord {
                step,
                epoch,
                beta: w.beta,
                grad_norm: norm,
                parts,
            });
            step += 1;
        }
        let acc = correct as f64 / tokens.max(1) as f64;
        epoch_accuracy.push(acc);
        if let Some(target) = cfg.stop_accuracy {
            if acc >= target && vae.teacher_forced_accuracy(samples) >= target {
                stopped_early = epoch + 1 < cfg.epochs;
                break;
            }
        }
    }
    let final_loss = vae.loss(
        samples,
        &LossWeights {
            beta: cfg.kl_max,
            aux: cfg.aux_weight,
            logp_factor: cfg.logp_factor,
        },
        Noise::Mean,
    );
    let report = TrainReport {
        config: *cfg,
        steps: step,
        epochs_run: epoch_accuracy.len(),
        history,
        epoch_accuracy,
        final_accuracy: final_loss.accuracy(),
        final_loss,
        stopped_early,
    };
    let mut meta = vae.meta().clone();
    meta["training"] = report.summary();
    vae.set_meta(meta);
    Ok((vae, report))
}
