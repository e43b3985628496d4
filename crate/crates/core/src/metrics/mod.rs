//! Generation-quality and set-distance metrics.

mod frechet;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chem::{canonical_smiles, Molecule};
use crate::descriptors::{morgan_fingerprint, tanimoto, DescriptorVector, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH};
use crate::screening::{brics_fragment_smiles, murcko_scaffold};

pub use frechet::{frechet_distance, frechet_gaussian, mean_cov, FrechetResult, RIDGE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("empty {0} set")]
    Empty(&'static str),
    #[error("need at least {need} samples, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("sample dimensions differ")]
    DimensionMismatch,
    #[error("scaffold similarity undefined: no scaffolds in the {0} set")]
    NoScaffolds(&'static str),
}

fn nonempty<T>(v: &[T], what: &'static str) -> Result<(), MetricsError> {
    if v.is_empty() {
        Err(MetricsError::Empty(what))
    } else {
        Ok(())
    }
}

pub fn uniqueness(canonical: &[String]) -> Result<f64, MetricsError> {
    nonempty(canonical, "generated")?;
    let uniq: HashSet<&String> = canonical.iter().collect();
    Ok(uniq.len() as f64 / canonical.len() as f64)
}

/// Fraction of unique generated molecules absent from the training set.
pub fn novelty(canonical: &[String], train: &HashSet<String>) -> Result<f64, MetricsError> {
    nonempty(canonical, "generated")?;
    let uniq: HashSet<&String> = canonical.iter().collect();
    Ok(uniq.iter().filter(|s| !train.contains(**s)).count() as f64 / uniq.len() as f64)
}

/// One minus the mean Tanimoto over all ordered pairs, self-pairs included.
pub fn intdiv(fps: &[Fingerprint]) -> Result<f64, MetricsError> {
    nonempty(fps, "generated")?;
    let n = fps.len();
    let mut total = 0.0;
    for i in 0..n {
        total += tanimoto(&fps[i], &fps[i]).unwrap();
        for j in i + 1..n {
            total += 2.0 * tanimoto(&fps[i], &fps[j]).unwrap();
        }
    }
    Ok(1.0 - total / (n * n) as f64)
}

/// Mean over `gen` of the best Tanimoto match in `reference`.
pub fn snn(gen: &[Fingerprint], reference: &[Fingerprint]) -> Result<f64, MetricsError> {
    nonempty(gen, "generated")?;
    nonempty(reference, "reference")?;
    let sum: f64 = gen
        .iter()
        .map(|g| reference.iter().map(|r| tanimoto(g, r).unwrap()).fold(0.0, f64::max))
        .sum();
    Ok(sum / gen.len() as f64)
}

/// Cosine similarity of two sparse count vectors; 0 when either is all-zero.
pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

pub fn fragment_counts(mols: &[Molecule]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for m in mols {
        for f in brics_fragment_smiles(m) {
            *out.entry(f).or_insert(0.0) += 1.0;
        }
    }
    out
}

pub fn scaffold_counts(mols: &[Molecule]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for m in mols {
        if let Some(s) = murcko_scaffold(m) {
            *out.entry(canonical_smiles(&s)).or_insert(0.0) += 1.0;
        }
    }
    out
}

pub fn frag(gen: &[Molecule], reference: &[Molecule]) -> Result<f64, MetricsError> {
    nonempty(gen, "generated")?;
    nonempty(reference, "reference")?;
    Ok(cosine(&fragment_counts(gen), &fragment_counts(reference)))
}

pub fn scaf(gen: &[Molecule], reference: &[Molecule]) -> Result<f64, MetricsError> {
    nonempty(gen, "generated")?;
    nonempty(reference, "reference")?;
    let a = scaffold_counts(gen);
    let b = scaffold_counts(reference);
    if a.is_empty() {
        return Err(MetricsError::NoScaffolds("generated"));
    }
    if b.is_empty() {
        return Err(MetricsError::NoScaffolds("reference"));
    }
    Ok(cosine(&a, &b))
}

/// Earth-mover distance between two empirical 1-D distributions.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    nonempty(a, "first")?;
    nonempty(b, "second")?;
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = xa.iter().chain(&xb).copied().collect();
    all.sort_by(f64::total_cmp);
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in all.windows(2) {
        while ia < xa.len() && xa[ia] <= w[0] {
            ia += 1;
        }
        while ib < xb.len() && xb[ib] <= w[0] {
            ib += 1;
        }
        let fa = ia as f64 / xa.len() as f64;
        let fb = ib as f64 / xb.len() as f64;
        total += (fa - fb).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

pub fn fcd_substitute(gen: &[Molecule], reference: &[Molecule]) -> Result<FrechetResult, MetricsError> {
    let rows = |ms: &[Molecule]| -> Vec<Vec<f64>> { ms.iter().map(|m| DescriptorVector::compute(m).as_array().to_vec()).collect() };
    frechet_distance(&rows(gen), &rows(reference), true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub fp_radius: u32,
    pub fp_width: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            fp_radius: DEFAULT_RADIUS,
            fp_width: DEFAULT_WIDTH,
        }
    }
}

impl MetricsConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub label: String,
    pub fcd_substitute: f64,
    pub fcd_ridge_applied: bool,
    pub snn: f64,
    pub frag: f64,
    pub scaf: Option<f64>,
    pub wasserstein_mw: f64,
    pub wasserstein_logp: f64,
    pub wasserstein_sa: f64,
    pub intdiv: f64,
    pub uniqueness: Option<f64>,
    pub novelty: Option<f64>,
    pub n_gen: usize,
    pub n_ref: usize,
    pub config_hash: String,
}

/// All set metrics for `gen` against `reference`. Uniqueness and novelty
/// are reported only when a training set is supplied.
pub fn compute_report(
    label: &str,
    gen: &[Molecule],
    reference: &[Molecule],
    train: Option<&HashSet<String>>,
    cfg: &MetricsConfig,
) -> Result<MetricReport, MetricsError> {
    nonempty(gen, "generated")?;
    nonempty(reference, "reference")?;
    let fp = |ms: &[Molecule]| -> Vec<Fingerprint> {
        ms.iter()
            .map(|m| morgan_fingerprint(m, cfg.fp_radius, cfg.fp_width).expect("validated width"))
            .collect()
    };
    let gfp = fp(gen);
    let rfp = fp(reference);
    let gd: Vec<DescriptorVector> = gen.iter().map(DescriptorVector::compute).collect();
    let rd: Vec<DescriptorVector> = reference.iter().map(DescriptorVector::compute).collect();
    let col = |v: &[DescriptorVector], f: fn(&DescriptorVector) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let fcd = fcd_substitute(gen, reference)?;
    let canon: Vec<String> = gen.iter().map(canonical_smiles).collect();
    let scaf = match scaf(gen, reference) {
        Ok(v) => Some(v),
        Err(MetricsError::NoScaffolds(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport {
        label: label.to_string(),
        fcd_substitute: fcd.distance,
        fcd_ridge_applied: fcd.ridge_applied,
        snn: snn(&gfp, &rfp)?,
        frag: frag(gen, reference)?,
        scaf,
        wasserstein_mw: wasserstein1(&col(&gd, |d| d.mw), &col(&rd, |d| d.mw))?,
        wasserstein_logp: wasserstein1(&col(&gd, |d| d.logp), &col(&rd, |d| d.logp))?,
        wasserstein_sa: wasserstein1(&col(&gd, |d| d.sa), &col(&rd, |d| d.sa))?,
        intdiv: intdiv(&gfp)?,
        uniqueness: train.map(|_| uniqueness(&canon)).transpose()?,
        novelty: train.map(|t| novelty(&canon, t)).transpose()?,
        n_gen: gen.len(),
        n_ref: reference.len(),
        config_hash: cfg.hash(),
    })
}

/// Aligned text table, one row per report, in the paper's column order.
pub fn render_table(reports: &[MetricReport]) -> String {
    let opt = |v: Option<f64>| v.map_or("--".to_string(), |x| format!("{x:.3}"));
    let mut out = format!(
        "{:<10} {:>14} {:>6} {:>6} {:>6} {:>9} {:>7} {:>7} | {:>6} {:>6} {:>6}\n",
        "Comp. set", "FCD-substitute", "SNN", "Frag.", "Scaf.", "MW", "logP", "SA", "IntDiv", "Uniq.", "Nov."
    );
    for r in reports {
        out.push_str(&format!(
            "{:<10} {:>14.3} {:>6.3} {:>6.3} {:>6} {:>9.3} {:>7.3} {:>7.3} | {:>6.3} {:>6} {:>6}\n",
            r.label,
            r.fcd_substitute,
            r.snn,
            r.frag,
            opt(r.scaf),
            r.wasserstein_mw,
            r.wasserstein_logp,
            r.wasserstein_sa,
            r.intdiv,
            opt(r.uniqueness),
            opt(r.novelty)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[f64]) -> BTreeMap<String, f64> {
        v.iter().enumerate().map(|(i, &x)| (i.to_string(), x)).collect()
    }

    #[test]
    fn cosine_hand_arithmetic() {
        let c = cosine(&counts(&[2.0, 1.0, 0.0]), &counts(&[1.0, 1.0, 1.0]));
        assert!((c - 3.0 / (5f64.sqrt() * 3f64.sqrt())).abs() < 1e-15);
        assert!((c - 0.7746).abs() < 1e-4);
    }

    #[test]
    fn wasserstein_cases() {
        assert_eq!(wasserstein1(&[0.0, 1.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert_eq!(wasserstein1(&[3.0], &[-1.5]).unwrap(), 4.5);
        assert_eq!(wasserstein1(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert!(wasserstein1(&[], &[1.0]).is_err());
    }
}
