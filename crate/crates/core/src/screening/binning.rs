use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptors::{similarity, Fingerprint, SimilarityKind};

use super::ScreeningError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub bin_width: f64,
    pub cap: usize,
    pub seed: u64,
    pub kind: SimilarityKind,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            bin_width: 0.1,
            cap: 100,
            seed: 0,
            kind: SimilarityKind::Dice,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBin {
    pub low: f64,
    pub high: f64,
    pub members: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningResult {
    /// Max similarity of each generated molecule to the reference set.
    pub max_similarity: Vec<f64>,
    pub bins: Vec<SimilarityBin>,
    /// Indices into the generated list, ascending.
    pub selected: Vec<usize>,
    pub excluded_exact: Vec<usize>,
}

pub(crate) fn bin_count(width: f64) -> usize {
    ((1.0 / width) - 1e-9).ceil().max(1.0) as usize
}

/// Bin index of `x` in `[0, 1]`; the tolerance keeps decimal edges such as
/// 0.3 in the upper bin despite float division.
pub(crate) fn bin_index(x: f64, width: f64, bins: usize) -> usize {
    ((x / width + 1e-9).floor().max(0.0) as usize).min(bins - 1)
}

pub fn max_similarities(generated: &[Fingerprint], reference: &[Fingerprint], kind: SimilarityKind) -> Result<Vec<f64>, ScreeningError> {
    if reference.is_empty() {
        return Err(ScreeningError::EmptyReference);
    }
    generated
        .iter()
        .map(|g| {
            reference.iter().try_fold(0.0f64, |best, r| {
                similarity(g, r, kind).map(|s| best.max(s)).map_err(ScreeningError::from)
            })
        })
        .collect()
}

/// Group by max similarity to the reference and draw at most `cap` per bin.
pub fn similarity_binning(generated: &[Fingerprint], reference: &[Fingerprint], cfg: &BinningConfig) -> Result<BinningResult, ScreeningError> {
    if !(cfg.bin_width > 0.0 && cfg.bin_width <= 1.0) {
        return Err(ScreeningError::BadBinWidth(cfg.bin_width));
    }
    let max_similarity = max_similarities(generated, reference, cfg.kind)?;
    let n_bins = bin_count(cfg.bin_width);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    let mut excluded_exact = Vec::new();
    for (i, &s) in max_similarity.iter().enumerate() {
        if s >= 1.0 {
            excluded_exact.push(i);
        } else {
            members[bin_index(s, cfg.bin_width, n_bins)].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut selected = Vec::new();
    let mut bins = Vec::with_capacity(n_bins);
    for (k, m) in members.iter().enumerate() {
        let take: Vec<usize> = if m.len() > cfg.cap {
            sample(&mut rng, m.len(), cfg.cap).into_iter().map(|j| m[j]).collect()
        } else {
            m.clone()
        };
        bins.push(SimilarityBin {
            low: k as f64 * cfg.bin_width,
            high: ((k + 1) as f64 * cfg.bin_width).min(1.0),
            members: m.len(),
            selected: take.len(),
        });
        selected.extend(take);
    }
    selected.sort_unstable();
    Ok(BinningResult {
        max_similarity,
        bins,
        selected,
        excluded_exact,
    })
}
