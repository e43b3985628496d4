//! Sequence variational autoencoder: bidirectional GRU encoder, GRU decoder
//! conditioned on the latent at every step, and three auxiliary property heads.

mod gru;
mod layout;
mod loss;
mod train;

use pagforge_core::chem::parse_smiles;
use pagforge_core::dataset::{TokenError, Vocabulary, BOS_ID, EOS_ID};
use pagforge_core::descriptors::{crippen_logp, morgan_fingerprint, sa_score};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::container::{Container, ContainerError, Tensor};

pub use layout::{Layout, Slot, HEAD_NAMES};
pub use loss::{LossParts, LossWeights};
pub use train::{train, StepRecord, TrainConfig, TrainReport};

use loss::Ctx;

pub const CONTAINER_KIND: &str = "vae";

#[derive(Debug, Error)]
pub enum VaeError {
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("cannot parse {smiles}: {message}")]
    Parse { smiles: String, message: String },
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("non-finite loss at step {step}: {parts:?}")]
    NonFinite { step: usize, parts: LossParts },
    #[error("latent has length {got}, model expects {expected}")]
    LatentDim { expected: usize, got: usize },
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub latent_dim: usize,
    pub aux_hidden: usize,
    pub aux_layers: usize,
    /// Dropout probability in thousandths.
    pub dropout_permille: u32,
    pub fp_bits: usize,
    pub fp_radius: u32,
}

impl VaeConfig {
    pub fn new(vocab_size: usize) -> Self {
        VaeConfig {
            vocab_size,
            embed_dim: 32,
            hidden: 64,
            latent_dim: 128,
            aux_hidden: 50,
            aux_layers: 4,
            dropout_permille: 200,
            fp_bits: 512,
            fp_radius: 2,
        }
    }

    pub fn dropout(&self) -> f64 {
        self.dropout_permille as f64 / 1000.0
    }

    pub fn validate(&self) -> Result<(), VaeError> {
        let dims = [self.vocab_size, self.embed_dim, self.hidden, self.latent_dim, self.aux_hidden, self.fp_bits];
        if dims.contains(&0) || self.aux_layers < 1 || self.dropout_permille >= 1000 {
            return Err(VaeError::Config(format!("{self:?}")));
        }
        if !self.fp_bits.is_power_of_two() {
            return Err(VaeError::Config(format!("fp_bits {} is not a power of two", self.fp_bits)));
        }
        Ok(())
    }
}

/// A tokenized, descriptor-labelled training molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub smiles: String,
    pub tokens: Vec<u32>,
    pub logp: f64,
    pub sa: f64,
    pub fp: Vec<f64>,
}

impl Sample {
    pub fn from_smiles(vocab: &Vocabulary, smiles: &str, cfg: &VaeConfig) -> Result<Self, VaeError> {
        let tokens = vocab.tokenize(smiles)?;
        let mol = parse_smiles(smiles).map_err(|e| VaeError::Parse {
            smiles: smiles.to_string(),
            message: e.to_string(),
        })?;
        let fp = morgan_fingerprint(&mol, cfg.fp_radius, cfg.fp_bits)
            .map_err(|e| VaeError::Config(e.to_string()))?
            .to_dense();
        Ok(Sample {
            smiles: smiles.to_string(),
            tokens,
            logp: crippen_logp(&mol),
            sa: sa_score(&mol),
            fp,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Mean,
    Seeded(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecodeMode {
    Greedy,
    Temperature(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    config: VaeConfig,
    vocab: Vocabulary,
    layout: Layout,
    params: Vec<f64>,
    meta: serde_json::Value,
}

impl Vae {
    pub fn new(config: VaeConfig, vocab: Vocabulary, seed: u64) -> Result<Self, VaeError> {
        if config.vocab_size != vocab.len() {
            return Err(VaeError::Config(format!(
                "vocab_size {} but vocabulary has {} tokens",
                config.vocab_size,
                vocab.len()
            )));
        }
        config.validate()?;
        let layout = Layout::new(&config);
        let params = layout.initialize(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Vae {
            config,
            vocab,
            layout,
            params,
            meta: json!({ "init_seed": seed }),
        })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn meta(&self) -> &serde_json::Value {
        &self.meta
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    /// sha256 over model config and vocabulary, first 8 bytes in hex.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.config).unwrap_or_default());
        h.update(serde_json::to_vec(self.vocab.tokens()).unwrap_or_default());
        h.update(self.vocab.max_len().to_le_bytes());
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            p: &self.params,
            lay: &self.layout,
            cfg: &self.config,
        }
    }

    pub fn sample(&self, smiles: &str) -> Result<Sample, VaeError> {
        Sample::from_smiles(&self.vocab, smiles, &self.config)
    }

    fn batch_pass(&self, batch: &[Sample], w: &LossWeights, noise: Noise, mut grad: Option<&mut [f64]>) -> LossParts {
        let ctx = self.ctx();
        let mut rng = match noise {
            Noise::Mean => None,
            Noise::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
        };
        let mut acc = LossParts::default();
        for s in batch {
            let parts = ctx.molecule(s, rng.as_mut(), w, grad.as_deref_mut());
            acc.add(&parts);
        }
        let f = 1.0 / batch.len().max(1) as f64;
        acc.scale(f);
        if let Some(g) = grad {
            g.iter_mut().for_each(|x| *x *= f);
        }
        acc
    }

    /// Batch-mean loss. `Noise::Mean` uses z = μ and disables dropout.
    pub fn loss(&self, batch: &[Sample], w: &LossWeights, noise: Noise) -> LossParts {
        self.batch_pass(batch, w, noise, None)
    }

    pub fn loss_and_grad(&self, batch: &[Sample], w: &LossWeights, noise: Noise) -> (LossParts, Vec<f64>) {
        let mut g = vec![0.0; self.params.len()];
        let parts = self.batch_pass(batch, w, noise, Some(&mut g));
        (parts, g)
    }

    /// Teacher-forced next-token accuracy with z = μ.
    pub fn teacher_forced_accuracy(&self, samples: &[Sample]) -> f64 {
        self.loss(samples, &LossWeights::default(), Noise::Mean).accuracy()
    }

    pub fn encode_tokens(&self, tokens: &[u32], noise: Noise) -> Encoding {
        let (mu, lv, ..) = self.ctx().posterior(tokens);
        let sigma: Vec<f64> = lv.iter().map(|v| (0.5 * v).exp()).collect();
        let z = match noise {
            Noise::Mean => mu.clone(),
            Noise::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                mu.iter()
                    .zip(&sigma)
                    .map(|(m, s)| {
                        let eta: f64 = StandardNormal.sample(&mut rng);
                        m + s * eta
                    })
                    .collect()
            }
        };
        Encoding { mu, sigma, z }
    }

    pub fn encode(&self, smiles: &str, noise: Noise) -> Result<Encoding, VaeError> {
        Ok(self.encode_tokens(&self.vocab.tokenize(smiles)?, noise))
    }

    /// Token ids up to and excluding the end marker, at most `max_len` of them.
    pub fn decode_ids(&self, z: &[f64], mode: DecodeMode, seed: u64) -> Result<Vec<u32>, VaeError> {
        if z.len() != self.config.latent_dim {
            return Err(VaeError::LatentDim {
                expected: self.config.latent_dim,
                got: z.len(),
            });
        }
        let ctx = self.ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut h, gz) = ctx.decoder_start(z);
        let mut prev = BOS_ID;
        let mut out = Vec::new();
        while out.len() < self.vocab.max_len() {
            let (s, logits) = ctx.decoder_step(&gz, prev, &h);
            let next = match mode {
                DecodeMode::Temperature(t) if t > 0.0 => {
                    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let ex: Vec<f64> = logits.iter().map(|v| ((v - m) / t).exp()).collect();
                    let mut u = rng.random::<f64>() * ex.iter().sum::<f64>();
                    let mut pick = ex.len() - 1;
                    for (k, p) in ex.iter().enumerate() {
                        if u < *p {
                            pick = k;
                            break;
                        }
                        u -= p;
                    }
                    pick
                }
                _ => argmax(&logits),
            } as u32;
            if next == EOS_ID {
                break;
            }
            out.push(next);
            prev = next;
            h = s.h;
        }
        Ok(out)
    }

    /// Decoded string, returned as produced; validity is checked downstream.
    pub fn decode(&self, z: &[f64], mode: DecodeMode, seed: u64) -> Result<String, VaeError> {
        let ids = self.decode_ids(z, mode, seed)?;
        Ok(self.vocab.detokenize(&ids)?)
    }

    pub fn to_container(&self) -> Container {
        let meta = json!({
            "config": self.config,
            "vocabulary": { "tokens": self.vocab.tokens(), "max_len": self.vocab.max_len() },
            "config_hash": self.config_hash(),
            "info": self.meta,
        });
        let mut c = Container::new(CONTAINER_KIND, meta);
        for s in self.layout.slots() {
            c.push(Tensor::from_f64(s.name.clone(), s.shape.clone(), &self.params[s.range()]));
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self, VaeError> {
        c.expect_kind(CONTAINER_KIND)?;
        let bad = |e: serde_json::Error| ContainerError::Meta(e.to_string());
        let config: VaeConfig = serde_json::from_value(c.meta["config"].clone()).map_err(bad)?;
        let tokens: Vec<String> = serde_json::from_value(c.meta["vocabulary"]["tokens"].clone()).map_err(bad)?;
        let max_len: usize = serde_json::from_value(c.meta["vocabulary"]["max_len"].clone()).map_err(bad)?;
        let vocab = Vocabulary::from_tokens(tokens, max_len);
        let mut vae = Vae::new(config, vocab, 0)?;
        for s in vae.layout.slots().to_vec() {
            let t = c.tensor(&s.name)?;
            if t.shape != s.shape {
                return Err(ContainerError::BadShape {
                    name: s.name.clone(),
                    expected: s.len(),
                    got: t.data.len(),
                }
                .into());
            }
            vae.params[s.range()].copy_from_slice(&t.to_f64());
        }
        vae.meta = c.meta["info"].clone();
        if c.meta["config_hash"] != json!(vae.config_hash()) {
            return Err(ContainerError::Meta("config hash mismatch".into()).into());
        }
        Ok(vae)
    }

    pub(crate) fn set_meta(&mut self, meta: serde_json::Value) {
        self.meta = meta;
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}
