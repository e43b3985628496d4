//! Molecular descriptors: weight, logP, synthetic accessibility, fluorine
//! fraction, Morgan fingerprints and set-overlap similarity.

mod crippen;
mod fingerprint;
mod sa;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{Element, Molecule};

pub use crippen::{atom_class as crippen_class, contribution as crippen_contribution, crippen_logp};
pub use fingerprint::{
    default_fingerprint, dice, dice_distance, morgan_counts, morgan_fingerprint, similarity, tanimoto, Fingerprint,
    SimilarityKind, DEFAULT_RADIUS, DEFAULT_WIDTH,
};
pub use sa::{bundled_table, sa_score, sa_score_with, spiro_and_bridgeheads, FragmentTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("fingerprint width {0} is not a power of two")]
    BadWidth(usize),
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

/// Sum of standard atomic weights, implicit hydrogens included.
pub fn molecular_weight(mol: &Molecule) -> f64 {
    let mut counts: BTreeMap<Element, usize> = BTreeMap::new();
    for a in &mol.atoms {
        *counts.entry(a.element).or_insert(0) += 1;
        *counts.entry(Element::H).or_insert(0) += a.h_count as usize;
    }
    counts
        .into_iter()
        .map(|(e, n)| n as f64 * e.atomic_weight())
        .sum()
}

pub fn heavy_atom_count(mol: &Molecule) -> usize {
    mol.atoms.iter().filter(|a| a.element != Element::H).count()
}

pub fn fluorine_fraction(mol: &Molecule) -> f64 {
    let heavy = heavy_atom_count(mol);
    if heavy == 0 {
        return 0.0;
    }
    mol.atoms.iter().filter(|a| a.element == Element::F).count() as f64 / heavy as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVector {
    pub mw: f64,
    pub logp: f64,
    pub sa: f64,
    pub num_atoms: usize,
    pub ring_count: usize,
    pub max_ring_size: usize,
    pub fluorine_fraction: f64,
}

impl DescriptorVector {
    pub fn compute(mol: &Molecule) -> Self {
        let rings = mol.ring_info();
        DescriptorVector {
            mw: molecular_weight(mol),
            logp: crippen_logp(mol),
            sa: sa_score(mol),
            num_atoms: heavy_atom_count(mol),
            ring_count: rings.ring_count,
            max_ring_size: rings.max_ring_size,
            fluorine_fraction: fluorine_fraction(mol),
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.mw,
            self.logp,
            self.sa,
            self.num_atoms as f64,
            self.ring_count as f64,
            self.max_ring_size as f64,
            self.fluorine_fraction,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn mw(s: &str) -> f64 {
        molecular_weight(&parse_smiles(s).unwrap())
    }

    #[test]
    fn weights_match_hand_sums() {
        assert!((mw("C") - 16.043).abs() < 0.01);
        assert!((mw("C[S+](C)C") - (3.0 * 12.011 + 9.0 * 1.008 + 32.06)).abs() < 1e-9);
        assert!((mw("C[S+](C)C") - 77.17).abs() < 0.01);
    }

    #[test]
    fn fluorine_fraction_counts_heavy_atoms() {
        let m = parse_smiles("FC(F)(F)C(F)(F)[S+](C)C").unwrap();
        // 5 F over 10 heavy atoms
        assert!((fluorine_fraction(&m) - 0.5).abs() < 1e-12);
        assert_eq!(fluorine_fraction(&parse_smiles("CCO").unwrap()), 0.0);
    }
}
