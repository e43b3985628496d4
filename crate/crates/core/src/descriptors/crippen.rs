//! Atom-additive logP over a coarse Crippen-style typing. Contributions are
//! read from `data/crippen.txt`; atoms the typing does not cover fall back to
//! the `*` entry.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use crate::chem::{BondOrder, Element, Molecule};

const TABLE: &str = include_str!("../../data/crippen.txt");

fn table() -> &'static HashMap<String, f64> {
    static T: OnceLock<HashMap<String, f64>> = OnceLock::new();
    T.get_or_init(|| parse_table(TABLE))
}

pub(crate) fn parse_table(text: &str) -> HashMap<String, f64> {
    text.lines()
        .filter_map(|line| {
            let line = line.split('#').next().unwrap().trim();
            let mut it = line.split_whitespace();
            let key = it.next()?;
            let value = it.next()?.parse().ok()?;
            Some((key.to_string(), value))
        })
        .collect()
}

pub fn contribution(class: &str) -> f64 {
    let t = table();
    t.get(class).or_else(|| t.get("*")).copied().unwrap_or(0.0)
}

fn is_hetero(e: Element) -> bool {
    !matches!(e, Element::C | Element::H | Element::Si | Element::B)
}

/// Crippen class of a heavy atom.
pub fn atom_class(mol: &Molecule, i: usize) -> &'static str {
    let a = &mol.atoms[i];
    let nbrs = mol.neighbors(i);
    let has = |order: BondOrder| nbrs.iter().any(|&(_, e)| mol.bonds[e].order == order);
    let double_partner = nbrs
        .iter()
        .find(|&&(_, e)| mol.bonds[e].order == BondOrder::Double)
        .map(|&(j, _)| j);
    match a.element {
        Element::C => {
            if a.formal_charge != 0 {
                return "C_charged";
            }
            if a.aromatic {
                if a.h_count > 0 {
                    return "C_arom_h";
                }
                let substituent = nbrs
                    .iter()
                    .find(|&&(_, e)| mol.bonds[e].order != BondOrder::Aromatic)
                    .map(|&(j, _)| j);
                return match substituent {
                    Some(j) if is_hetero(mol.atoms[j].element) => "C_arom_x",
                    Some(_) => "C_arom_c",
                    None => "C_arom_bridge",
                };
            }
            if has(BondOrder::Triple) {
                return "C_alkyne";
            }
            if let Some(j) = double_partner {
                return if is_hetero(mol.atoms[j].element) {
                    "C_eq_het"
                } else {
                    "C_alkene"
                };
            }
            let hetero = nbrs.iter().filter(|&&(j, _)| is_hetero(mol.atoms[j].element)).count();
            let degree = nbrs.len();
            match (hetero, degree <= 2) {
                (0, true) => "C_primary",
                (0, false) => "C_tertiary",
                (_, true) => "C_ch2x",
                (_, false) => "C_chx",
            }
        }
        Element::N => {
            if a.formal_charge != 0 {
                "N_charged"
            } else if a.aromatic {
                if a.h_count > 0 || nbrs.len() == 3 {
                    "N_arom_h"
                } else {
                    "N_aromatic"
                }
            } else if has(BondOrder::Double) || has(BondOrder::Triple) {
                "N_unsat"
            } else {
                match a.h_count {
                    2.. => "N_primary",
                    1 => "N_secondary",
                    0 => "N_tertiary",
                }
            }
        }
        Element::O => {
            if a.formal_charge != 0 {
                "O_charged"
            } else if a.aromatic {
                "O_aromatic"
            } else if let Some(j) = double_partner {
                if mol.atoms[j].aromatic {
                    "O_carbonyl_arom"
                } else {
                    "O_carbonyl"
                }
            } else if a.h_count > 0 {
                "O_alcohol"
            } else if nbrs.iter().any(|&(j, _)| mol.atoms[j].aromatic) {
                "O_ether_arom"
            } else {
                "O_ether"
            }
        }
        Element::S => {
            if a.formal_charge != 0 {
                "S_charged"
            } else if a.aromatic {
                "S_aromatic"
            } else if has(BondOrder::Double) {
                "S_oxidized"
            } else {
                "S_aliphatic"
            }
        }
        Element::F => "F",
        Element::Cl => "Cl",
        Element::Br => "Br",
        Element::I if a.formal_charge != 0 => "I_charged",
        Element::I => "I",
        Element::Si => "Si",
        Element::P => "P",
        _ => "*",
    }
}

fn hydrogen_class(element: Element) -> &'static str {
    match element {
        Element::C => "H_c",
        Element::N => "H_n",
        Element::O => "H_o",
        _ => "H_other",
    }
}

/// Summed per class so the value does not depend on atom order.
pub fn crippen_logp(mol: &Molecule) -> f64 {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for i in 0..mol.atom_count() {
        let a = &mol.atoms[i];
        *counts.entry(atom_class(mol, i)).or_insert(0) += 1;
        *counts.entry(hydrogen_class(a.element)).or_insert(0) += a.h_count as usize;
    }
    counts
        .into_iter()
        .map(|(class, n)| n as f64 * contribution(class))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn logp(s: &str) -> f64 {
        crippen_logp(&parse_smiles(s).unwrap())
    }

    #[test]
    fn table_loads_every_class() {
        let t = table();
        assert!(t.len() >= 30);
        for class in ["C_primary", "H_c", "S_charged", "*"] {
            assert!(t.contains_key(class), "{class}");
        }
    }

    #[test]
    fn hexane_more_lipophilic_than_ethanol() {
        assert!(logp("CCCCCC") > logp("CCO"));
    }

    #[test]
    fn methylene_increment_is_fixed() {
        let step = contribution("C_primary") + 2.0 * contribution("H_c");
        for n in 3..10 {
            let a = logp(&"C".repeat(n));
            let b = logp(&"C".repeat(n + 1));
            assert!((b - a - step).abs() < 1e-12);
        }
    }

    #[test]
    fn spelling_independent() {
        assert_eq!(logp("OCC"), logp("CCO"));
        assert_eq!(logp("C[S+](C)c1ccccc1"), logp("c1ccc(cc1)[S+](C)C"));
    }

    #[test]
    fn unknown_types_use_wildcard() {
        let m = parse_smiles("[Na+]").unwrap();
        assert_eq!(atom_class(&m, 0), "*");
        assert_eq!(crippen_logp(&m), contribution("*"));
    }
}
