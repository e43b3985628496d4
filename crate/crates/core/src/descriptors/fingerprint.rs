use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::chem::{BondOrder, Molecule};

use super::DescriptorError;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: usize = 2048;

/// Fixed-width folded Morgan fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn empty(width: usize, radius: u32) -> Result<Self, DescriptorError> {
        if width == 0 || !width.is_power_of_two() {
            return Err(DescriptorError::BadWidth(width));
        }
        Ok(Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            radius,
        })
    }

    pub fn from_bits(width: usize, bits: &[usize]) -> Result<Self, DescriptorError> {
        let mut fp = Fingerprint::empty(width, 0)?;
        for &b in bits {
            fp.set(b % width);
        }
        Ok(fp)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }

    fn check(&self, other: &Fingerprint) -> Result<(), DescriptorError> {
        if self.width != other.width {
            return Err(DescriptorError::WidthMismatch(self.width, other.width));
        }
        Ok(())
    }

    pub fn and_count(&self, other: &Fingerprint) -> Result<usize, DescriptorError> {
        self.check(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn or_count(&self, other: &Fingerprint) -> Result<usize, DescriptorError> {
        self.check(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum())
    }

    /// Per-bit 0/1 vector, for use as a regression target.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.width).map(|b| if self.get(b) { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Tanimoto,
    #[default]
    Dice,
}

/// Both coefficients are defined as 0 when both fingerprints are empty.
pub fn similarity(a: &Fingerprint, b: &Fingerprint, kind: SimilarityKind) -> Result<f64, DescriptorError> {
    let both = a.and_count(b)? as f64;
    Ok(match kind {
        SimilarityKind::Tanimoto => {
            let either = a.or_count(b)? as f64;
            if either == 0.0 {
                0.0
            } else {
                both / either
            }
        }
        SimilarityKind::Dice => {
            let total = (a.count_ones() + b.count_ones()) as f64;
            if total == 0.0 {
                0.0
            } else {
                2.0 * both / total
            }
        }
    })
}

pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, DescriptorError> {
    similarity(a, b, SimilarityKind::Tanimoto)
}

pub fn dice(a: &Fingerprint, b: &Fingerprint) -> Result<f64, DescriptorError> {
    similarity(a, b, SimilarityKind::Dice)
}

pub fn dice_distance(a: &Fingerprint, b: &Fingerprint) -> Result<f64, DescriptorError> {
    dice(a, b).map(|d| 1.0 - d)
}

// Stable 64-bit mixing (splitmix64 finalizer) so identifiers never depend on
// the standard library's hasher.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn combine(seed: u64, value: u64) -> u64 {
    mix(seed ^ mix(value))
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Unfolded circular environment identifiers with occurrence counts,
/// radii 0..=radius. Environments covering a bond set already seen are
/// dropped, as in ECFP.
pub fn morgan_counts(mol: &Molecule, radius: u32) -> BTreeMap<u32, u32> {
    let n = mol.atom_count();
    let mut counts = BTreeMap::new();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = &mol.atoms[i];
            let mut h = 0xcbf2_9ce4_8422_2325u64;
            for v in [
                a.element.atomic_number() as u64,
                mol.degree(i) as u64,
                a.h_count as u64,
                (a.formal_charge as i64 + 8) as u64,
                mol.is_ring_atom(i) as u64,
            ] {
                h = combine(h, v);
            }
            h
        })
        .collect();
    for &id in &ids {
        *counts.entry(id as u32).or_insert(0) += 1;
    }

    let words = mol.bonds.len().div_ceil(64).max(1);
    let mut cover: Vec<Vec<u64>> = vec![vec![0u64; words]; n];
    let mut seen_cover: HashSet<Vec<u64>> = HashSet::new();
    for layer in 1..=radius {
        let mut next_ids = ids.clone();
        let mut next_cover = cover.clone();
        let mut fresh: Vec<(Vec<u64>, u64)> = Vec::new();
        for i in 0..n {
            let mut env: Vec<(u64, u64)> = mol
                .neighbors(i)
                .iter()
                .map(|&(j, e)| (bond_code(mol.bonds[e].order), ids[j]))
                .collect();
            env.sort_unstable();
            let mut h = combine(layer as u64, ids[i]);
            for (b, nb) in env {
                h = combine(combine(h, b), nb);
            }
            next_ids[i] = h;
            for &(j, e) in mol.neighbors(i) {
                next_cover[i][e / 64] |= 1 << (e % 64);
                for (w, c) in next_cover[i].iter_mut().zip(&cover[j]) {
                    *w |= c;
                }
            }
            fresh.push((next_cover[i].clone(), h));
        }
        // deterministic order: by cover, then id
        fresh.sort();
        for (c, h) in fresh {
            if c.iter().all(|&w| w == 0) {
                continue;
            }
            if seen_cover.insert(c) {
                *counts.entry(h as u32).or_insert(0) += 1;
            }
        }
        ids = next_ids;
        cover = next_cover;
    }
    counts
}

pub fn morgan_fingerprint(mol: &Molecule, radius: u32, width: usize) -> Result<Fingerprint, DescriptorError> {
    let mut fp = Fingerprint::empty(width, radius)?;
    for &id in morgan_counts(mol, radius).keys() {
        fp.set(id as usize % width);
    }
    Ok(fp)
}

pub fn default_fingerprint(mol: &Molecule) -> Fingerprint {
    morgan_fingerprint(mol, DEFAULT_RADIUS, DEFAULT_WIDTH).expect("default width is a power of two")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str, r: u32) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), r, 2048).unwrap()
    }

    #[test]
    fn single_atom_radius_zero_sets_one_bit() {
        assert_eq!(fp("C", 0).count_ones(), 1);
        assert_eq!(fp("[S+](C)(C)C", 0).count_ones(), 2);
    }

    #[test]
    fn identical_molecules_identical_bits() {
        assert_eq!(fp("CCO", 2), fp("OCC", 2));
    }

    #[test]
    fn benzene_and_pyridine_differ() {
        for r in 1..=3 {
            assert_ne!(fp("c1ccccc1", r), fp("c1ccncc1", r));
        }
    }

    #[test]
    fn hand_arithmetic() {
        let a = Fingerprint::from_bits(64, &[1, 2]).unwrap();
        let b = Fingerprint::from_bits(64, &[2, 3]).unwrap();
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &b).unwrap(), 1.0 / 3.0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(64, &[7]).unwrap();
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
    }

    #[test]
    fn width_rules() {
        assert!(Fingerprint::empty(1000, 2).is_err());
        let a = Fingerprint::from_bits(64, &[1]).unwrap();
        let b = Fingerprint::from_bits(128, &[1]).unwrap();
        assert!(matches!(dice(&a, &b), Err(DescriptorError::WidthMismatch(64, 128))));
    }
}
