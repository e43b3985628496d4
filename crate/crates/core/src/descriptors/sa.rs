//! Ertl-style synthetic accessibility: a fragment-familiarity term minus
//! complexity penalties (size, spiro, bridgehead, macrocycle), rescaled onto
//! [1, 10] where 1 is easy.
//!
//! Fragment familiarity comes from environment frequencies counted once over
//! the bundled training corpus.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use crate::chem::{parse_smiles, Molecule};

use super::fingerprint::morgan_counts;

const CORPUS: &str = include_str!("../../../../data/minizinc.smi");

/// Share of all fragment occurrences covered by the "familiar" fragments.
const COVERAGE: f64 = 0.8;
const UNSEEN: f64 = -4.0;
const CAP: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct FragmentTable {
    scores: BTreeMap<u32, f64>,
}

impl FragmentTable {
    /// Count radius-2 environments over a SMILES-per-line corpus (optional
    /// tab-separated id; unparseable lines are skipped).
    pub fn from_corpus(text: &str) -> Self {
        let mut freq: BTreeMap<u32, u64> = BTreeMap::new();
        for line in text.lines() {
            let smi = line.split('\t').next().unwrap_or("").trim();
            if smi.is_empty() || smi.starts_with('#') {
                continue;
            }
            if let Ok(m) = parse_smiles(smi) {
                for (id, c) in morgan_counts(&m, 2) {
                    *freq.entry(id).or_insert(0) += c as u64;
                }
            }
        }
        Self::from_frequencies(freq)
    }

    pub fn from_frequencies(freq: BTreeMap<u32, u64>) -> Self {
        let total: u64 = freq.values().sum();
        let mut sorted: Vec<u64> = freq.values().copied().collect();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        // frequency at which the cumulative share reaches COVERAGE
        let mut acc = 0u64;
        let mut pivot = 1u64;
        for &f in &sorted {
            acc += f;
            pivot = f;
            if acc as f64 >= COVERAGE * total as f64 {
                break;
            }
        }
        let scores = freq
            .into_iter()
            .map(|(id, f)| (id, ((f as f64) / pivot as f64).log10().clamp(UNSEEN, CAP)))
            .collect();
        FragmentTable { scores }
    }

    pub fn score(&self, id: u32) -> f64 {
        self.scores.get(&id).copied().unwrap_or(UNSEEN)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn bundled_table() -> &'static FragmentTable {
    static T: OnceLock<FragmentTable> = OnceLock::new();
    T.get_or_init(|| FragmentTable::from_corpus(CORPUS))
}

pub fn sa_score(mol: &Molecule) -> f64 {
    sa_score_with(mol, bundled_table())
}

pub fn sa_score_with(mol: &Molecule, table: &FragmentTable) -> f64 {
    let n = mol.atom_count();
    if n == 0 {
        return 10.0;
    }
    let counts = morgan_counts(mol, 2);
    let occurrences: u32 = counts.values().sum();
    let fragment_score = counts
        .iter()
        .map(|(&id, &c)| table.score(id) * c as f64)
        .sum::<f64>()
        / occurrences.max(1) as f64;

    let n_f = n as f64;
    let size_penalty = n_f.powf(1.005) - n_f;
    let (spiro, bridgeheads) = spiro_and_bridgeheads(mol);
    let spiro_penalty = (spiro as f64 + 1.0).log10();
    let bridge_penalty = (bridgeheads as f64 + 1.0).log10();
    let macro_penalty = if mol.ring_info().max_ring_size > 8 {
        2f64.log10()
    } else {
        0.0
    };
    let complexity = -(size_penalty + spiro_penalty + bridge_penalty + macro_penalty);

    let features = counts.len() as f64;
    let symmetry = if n_f > features {
        (n_f / features).ln() * 0.5
    } else {
        0.0
    };

    let raw = fragment_score + complexity + symmetry;
    let (lo, hi) = (-4.0, 2.5);
    let mut sa = 11.0 - (raw - lo + 1.0) / (hi - lo) * 9.0;
    if sa > 8.0 {
        sa = 8.0 + (sa + 1.0 - 9.0).ln();
    }
    sa.clamp(1.0, 10.0)
}

/// Spiro atoms (the single shared atom of two rings) and bridgehead atoms
/// (shared atoms with three ring neighbors in a pair of rings that share
/// more than one bond).
pub fn spiro_and_bridgeheads(mol: &Molecule) -> (usize, usize) {
    let rings = &mol.ring_info().rings;
    let mut spiro = HashSet::new();
    let mut bridge = HashSet::new();
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            let a: HashSet<usize> = rings[i].iter().copied().collect();
            let shared: Vec<usize> = rings[j].iter().copied().filter(|x| a.contains(x)).collect();
            if shared.len() == 1 {
                spiro.insert(shared[0]);
            } else if shared.len() >= 3 {
                let union: HashSet<usize> = rings[i].iter().chain(&rings[j]).copied().collect();
                for &s in &shared {
                    let ring_nbrs = mol.neighbors(s).iter().filter(|(nb, _)| union.contains(nb)).count();
                    if ring_nbrs >= 3 {
                        bridge.insert(s);
                    }
                }
            }
        }
    }
    (spiro.len(), bridge.len())
}
