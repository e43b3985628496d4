use serde::{Deserialize, Serialize};

use crate::descriptors::{dice_distance, Fingerprint};

use super::binning::{bin_count, bin_index};
use super::ScreeningError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceHistogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub pairs: u64,
    /// Lowest bin with the maximal count.
    pub mode_bin: usize,
}

impl DiceHistogram {
    pub fn bin_low(&self, k: usize) -> f64 {
        k as f64 * self.bin_width
    }

    pub fn bin_high(&self, k: usize) -> f64 {
        ((k + 1) as f64 * self.bin_width).min(1.0)
    }

    pub fn mode_range(&self) -> (f64, f64) {
        (self.bin_low(self.mode_bin), self.bin_high(self.mode_bin))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:.4},{:.4},{}\n", self.bin_low(k), self.bin_high(k), c));
        }
        out
    }
}

/// Every pairwise Dice distance, binned over `[0, 1]`.
pub fn dice_histogram(fps: &[Fingerprint], bin_width: f64) -> Result<DiceHistogram, ScreeningError> {
    if fps.len() < 2 {
        return Err(ScreeningError::TooFewMolecules(fps.len()));
    }
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(ScreeningError::BadBinWidth(bin_width));
    }
    let n_bins = bin_count(bin_width);
    let mut counts = vec![0u64; n_bins];
    let mut pairs = 0;
    for i in 0..fps.len() {
        for j in i + 1..fps.len() {
            let d = dice_distance(&fps[i], &fps[j])?;
            counts[bin_index(d, bin_width, n_bins)] += 1;
            pairs += 1;
        }
    }
    let max = *counts.iter().max().unwrap();
    let mode_bin = counts.iter().position(|&c| c == max).unwrap();
    Ok(DiceHistogram {
        bin_width,
        counts,
        pairs,
        mode_bin,
    })
}
