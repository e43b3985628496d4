use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, parse_smiles, BondOrder, Element, Molecule};
use crate::descriptors::fluorine_fraction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    NotSulfonium,
    ContainsAmine,
    FluorineRich,
    ExactMatchTraining,
    InvalidSmiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub id: String,
    pub smiles: String,
    pub canonical: Option<String>,
    pub passed: bool,
    pub failed_rules: Vec<FilterRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub fluorine_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { fluorine_threshold: 0.2 }
    }
}

/// Sulfur carrying +1 with three single-bonded substituents (hydrogens count).
pub fn is_sulfonium(mol: &Molecule) -> bool {
    mol.atoms.iter().enumerate().any(|(i, a)| {
        a.element == Element::S
            && a.formal_charge == 1
            && mol.degree(i) + a.h_count as usize == 3
            && mol.neighbors(i).iter().all(|&(_, e)| mol.bonds[e].order == BondOrder::Single)
    })
}

/// Neutral sp3 nitrogen outside aromatic rings and not bonded to a carbonyl carbon.
pub fn contains_amine(mol: &Molecule) -> bool {
    mol.atoms.iter().enumerate().any(|(i, a)| {
        if a.element != Element::N || a.formal_charge != 0 || a.aromatic {
            return false;
        }
        let nbrs = mol.neighbors(i);
        if mol.degree(i) + a.h_count as usize != 3 || nbrs.iter().any(|&(_, e)| mol.bonds[e].order != BondOrder::Single) {
            return false;
        }
        !nbrs.iter().any(|&(j, _)| mol.atoms[j].element == Element::C && has_double_bonded_oxygen(mol, j))
    })
}

fn has_double_bonded_oxygen(mol: &Molecule, atom: usize) -> bool {
    mol.neighbors(atom)
        .iter()
        .any(|&(k, e)| mol.atoms[k].element == Element::O && mol.bonds[e].kekule == BondOrder::Double)
}

pub fn verdict_for(mol: &Molecule, training: &HashSet<String>, cfg: &FilterConfig) -> (String, Vec<FilterRule>) {
    let canonical = canonical_smiles(mol);
    let mut failed = Vec::new();
    if !is_sulfonium(mol) {
        failed.push(FilterRule::NotSulfonium);
    }
    if contains_amine(mol) {
        failed.push(FilterRule::ContainsAmine);
    }
    if fluorine_fraction(mol) >= cfg.fluorine_threshold {
        failed.push(FilterRule::FluorineRich);
    }
    if training.contains(&canonical) {
        failed.push(FilterRule::ExactMatchTraining);
    }
    (canonical, failed)
}

/// One verdict per `(id, smiles)` input, in input order.
pub fn chem_filters(inputs: &[(String, String)], training_canonical: &HashSet<String>, cfg: &FilterConfig) -> Vec<FilterVerdict> {
    inputs
        .iter()
        .map(|(id, smiles)| match parse_smiles(smiles) {
            Ok(mol) => {
                let (canonical, failed) = verdict_for(&mol, training_canonical, cfg);
                FilterVerdict {
                    id: id.clone(),
                    smiles: smiles.clone(),
                    canonical: Some(canonical),
                    passed: failed.is_empty(),
                    failed_rules: failed,
                }
            }
            Err(_) => FilterVerdict {
                id: id.clone(),
                smiles: smiles.clone(),
                canonical: None,
                passed: false,
                failed_rules: vec![FilterRule::InvalidSmiles],
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(s: &str) -> Vec<FilterRule> {
        verdict_for(&parse_smiles(s).unwrap(), &HashSet::new(), &FilterConfig::default()).1
    }

    #[test]
    fn archetypes() {
        assert!(rules("C[S+](C)C").is_empty());
        assert_eq!(rules("CC[S+](C)C.CCN"), vec![FilterRule::ContainsAmine]);
        assert_eq!(rules("FC(F)(F)C(F)(F)[S+](C)C"), vec![FilterRule::FluorineRich]);
        assert_eq!(rules("CCS(C)C").first(), Some(&FilterRule::NotSulfonium));
    }

    #[test]
    fn amine_exclusions() {
        assert!(!contains_amine(&parse_smiles("CC(=O)NC").unwrap()));
        assert!(!contains_amine(&parse_smiles("c1cc[nH]c1").unwrap()));
        assert!(!contains_amine(&parse_smiles("C[N+](C)(C)C").unwrap()));
        assert!(!contains_amine(&parse_smiles("CC#N").unwrap()));
        assert!(contains_amine(&parse_smiles("Nc1ccccc1").unwrap()));
        assert!(contains_amine(&parse_smiles("CCN(CC)CC").unwrap()));
    }

    #[test]
    fn ring_sulfonium() {
        assert!(is_sulfonium(&parse_smiles("c1ccc(cc1)[S+]1CCCC1").unwrap()));
    }

    #[test]
    fn exact_match_and_invalid() {
        let train: HashSet<String> = [canonical_smiles(&parse_smiles("C[S+](C)CC").unwrap())].into();
        let v = chem_filters(
            &[("a".into(), "CC[S+](C)C".into()), ("b".into(), "C1CC".into())],
            &train,
            &FilterConfig::default(),
        );
        assert_eq!(v[0].failed_rules, vec![FilterRule::ExactMatchTraining]);
        assert_eq!(v[1].failed_rules, vec![FilterRule::InvalidSmiles]);
        assert!(!v[1].passed);
    }
}
