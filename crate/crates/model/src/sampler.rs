//! Conditional latent-space sampling: propose from the latent density and
//! accept with probability equal to the product of attribute probabilities.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LatentClassifier;
use crate::gmm::GaussianMixture;

/// Anything yielding `q(a = 1 | z)`.
pub trait LatentScorer: Sync {
    fn score(&self, z: &[f64]) -> f64;
}

impl LatentScorer for LatentClassifier {
    fn score(&self, z: &[f64]) -> f64 {
        self.predict(z)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> LatentScorer for F {
    fn score(&self, z: &[f64]) -> f64 {
        self(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

pub struct AttributeSpec<'a> {
    pub attributes: Vec<(&'a dyn LatentScorer, Polarity)>,
}

impl<'a> AttributeSpec<'a> {
    pub fn single(scorer: &'a dyn LatentScorer, polarity: Polarity) -> Self {
        AttributeSpec {
            attributes: vec![(scorer, polarity)],
        }
    }

    /// `∏ q(a_i | z)` with each factor taken at its target polarity.
    pub fn acceptance(&self, z: &[f64]) -> f64 {
        self.attributes
            .iter()
            .map(|(s, p)| {
                let q = s.score(z).clamp(0.0, 1.0);
                match p {
                    Polarity::Positive => q,
                    Polarity::Negative => 1.0 - q,
                }
            })
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub seed: u64,
    pub target_accepted: usize,
    pub max_draws: usize,
    /// Independent random streams; fixes the output for a given seed.
    pub lanes: usize,
    /// Draws per lane per round.
    pub round_size: usize,
    /// Threads used to evaluate lanes; does not affect the output.
    pub workers: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            target_accepted: 1000,
            max_draws: 1_000_000,
            lanes: 4,
            round_size: 256,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub lane: usize,
    pub index: usize,
    pub acceptance_prob: f64,
    pub uniform: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedSample {
    pub lane: usize,
    pub index: usize,
    pub z: Vec<f64>,
    pub acceptance_prob: f64,
    pub decoded: String,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub config: SamplerConfig,
    pub draws: Vec<Draw>,
    pub accepted: Vec<AcceptedSample>,
    pub total_draws: usize,
    pub acceptance_rate: f64,
    pub validity_rate: f64,
    pub mean_proposal_score: f64,
    pub mean_accepted_score: f64,
}

impl SampleRun {
    /// Run summary without the per-draw audit.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.config.seed,
            "config": self.config,
            "total_draws": self.total_draws,
            "accepted": self.accepted.len(),
            "acceptance_rate": self.acceptance_rate,
            "validity_rate": self.validity_rate,
            "mean_proposal_score": self.mean_proposal_score,
            "mean_accepted_score": self.mean_accepted_score,
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("no proposal accepted in {0} draws")]
    NoAcceptances(usize),
    #[error("mixture dimension {gmm} does not match expected latent dimension {expected}")]
    DimensionMismatch { gmm: usize, expected: usize },
    #[error("invalid sampler configuration: {0}")]
    Config(&'static str),
}

struct LaneOut {
    draws: Vec<Draw>,
    accepted: Vec<(usize, Vec<f64>, f64)>,
}

fn run_lane(gmm: &GaussianMixture, pick: &WeightedIndex<f64>, spec: &AttributeSpec, rng: &mut ChaCha8Rng, lane: usize, start: usize, n: usize) -> LaneOut {
    let mut out = LaneOut {
        draws: Vec::with_capacity(n),
        accepted: Vec::new(),
    };
    for index in start..start + n {
        let z = gmm.sample_one(pick, rng);
        let p = spec.acceptance(&z);
        let u: f64 = rng.random();
        let accepted = u < p;
        out.draws.push(Draw {
            lane,
            index,
            acceptance_prob: p,
            uniform: u,
            accepted,
        });
        if accepted {
            out.accepted.push((index, z, p));
        }
    }
    out
}

/// Rejection sampling in rounds. Each lane owns a ChaCha stream keyed by
/// `(seed, lane)`; within a round results merge in lane order, so the
/// accepted set depends only on the seed, lane count and round size.
pub fn class_sample(
    gmm: &GaussianMixture,
    spec: &AttributeSpec,
    decode: &(dyn Fn(&[f64]) -> String + Sync),
    is_valid: &(dyn Fn(&str) -> bool + Sync),
    cfg: &SamplerConfig,
) -> Result<SampleRun, SamplerError> {
    if cfg.lanes == 0 || cfg.round_size == 0 {
        return Err(SamplerError::Config("lanes and round_size must be positive"));
    }
    if spec.attributes.is_empty() {
        return Err(SamplerError::Config("at least one attribute is required"));
    }
    let pick = WeightedIndex::new(&gmm.weights).map_err(|_| SamplerError::Config("mixture weights"))?;
    let mut rngs: Vec<ChaCha8Rng> = (0..cfg.lanes)
        .map(|l| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(l as u64);
            r
        })
        .collect();
    let mut draws = Vec::new();
    let mut pending: Vec<(usize, usize, Vec<f64>, f64)> = Vec::new();
    let mut drawn_per_lane = vec![0usize; cfg.lanes];
    let mut total = 0;
    while pending.len() < cfg.target_accepted && total < cfg.max_draws {
        let mut quota = Vec::with_capacity(cfg.lanes);
        let mut left = cfg.max_draws - total;
        for _ in 0..cfg.lanes {
            let q = cfg.round_size.min(left);
            quota.push(q);
            left -= q;
        }
        let workers = cfg.workers.clamp(1, cfg.lanes);
        let mut outs: Vec<Option<LaneOut>> = (0..cfg.lanes).map(|_| None).collect();
        if workers == 1 {
            for (l, rng) in rngs.iter_mut().enumerate() {
                outs[l] = Some(run_lane(gmm, &pick, spec, rng, l, drawn_per_lane[l], quota[l]));
            }
        } else {
            let chunk = cfg.lanes.div_ceil(workers);
            std::thread::scope(|s| {
                let handles: Vec<_> = rngs
                    .chunks_mut(chunk)
                    .enumerate()
                    .map(|(c, rs)| {
                        let (pick, quota, drawn) = (&pick, &quota, &drawn_per_lane);
                        s.spawn(move || {
                            rs.iter_mut()
                                .enumerate()
                                .map(|(o, rng)| {
                                    let l = c * chunk + o;
                                    run_lane(gmm, pick, spec, rng, l, drawn[l], quota[l])
                                })
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                for (c, h) in handles.into_iter().enumerate() {
                    for (o, out) in h.join().expect("sampler lane panicked").into_iter().enumerate() {
                        outs[c * chunk + o] = Some(out);
                    }
                }
            });
        }
        for (l, out) in outs.into_iter().enumerate() {
            let out = out.unwrap();
            drawn_per_lane[l] += quota[l];
            total += quota[l];
            draws.extend(out.draws);
            pending.extend(out.accepted.into_iter().map(|(i, z, p)| (l, i, z, p)));
        }
    }
    if pending.is_empty() {
        return Err(SamplerError::NoAcceptances(total));
    }
    pending.truncate(cfg.target_accepted);
    let accepted: Vec<AcceptedSample> = pending
        .into_iter()
        .map(|(lane, index, z, p)| {
            let decoded = decode(&z);
            let valid = is_valid(&decoded);
            AcceptedSample {
                lane,
                index,
                z,
                acceptance_prob: p,
                decoded,
                valid,
            }
        })
        .collect();
    let n_acc_all = draws.iter().filter(|d| d.accepted).count();
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
        if c == 0 {
            0.0
        } else {
            s / c as f64
        }
    };
    Ok(SampleRun {
        config: *cfg,
        total_draws: total,
        acceptance_rate: n_acc_all as f64 / total as f64,
        validity_rate: accepted.iter().filter(|a| a.valid).count() as f64 / accepted.len() as f64,
        mean_proposal_score: mean(&mut draws.iter().map(|d| d.acceptance_prob)),
        mean_accepted_score: mean(&mut accepted.iter().map(|a| a.acceptance_prob)),
        draws,
        accepted,
    })
}
