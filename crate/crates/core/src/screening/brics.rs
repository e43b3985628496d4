use std::collections::BTreeMap;

use crate::chem::{canonical_smiles, BondOrder, Element, Molecule};

/// BRICS atom environments. `L7` covers both sides of the C=C rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Env {
    L1,
    L3,
    L4,
    L5,
    L6,
    L7,
    L8,
    L9,
    L10,
    L11,
    L12,
    L13,
    L14,
    L15,
    L16,
}

use Env::*;

const SINGLE_RULES: &[(Env, Env)] = &[
    (L1, L3),
    (L1, L5),
    (L1, L10),
    (L3, L4),
    (L3, L13),
    (L3, L14),
    (L3, L15),
    (L3, L16),
    (L4, L5),
    (L4, L11),
    (L5, L12),
    (L5, L14),
    (L5, L16),
    (L5, L13),
    (L5, L15),
    (L6, L13),
    (L6, L14),
    (L6, L15),
    (L6, L16),
    (L8, L9),
    (L8, L10),
    (L8, L13),
    (L8, L14),
    (L8, L15),
    (L8, L16),
    (L9, L13),
    (L9, L14),
    (L9, L15),
    (L9, L16),
    (L10, L13),
    (L10, L14),
    (L10, L15),
    (L10, L16),
    (L11, L13),
    (L11, L14),
    (L11, L15),
    (L11, L16),
    (L13, L14),
    (L13, L15),
    (L13, L16),
    (L14, L14),
    (L14, L15),
    (L14, L16),
    (L15, L16),
    (L16, L16),
];

struct View<'a> {
    mol: &'a Molecule,
}

impl View<'_> {
    fn el(&self, i: usize) -> Element {
        self.mol.atoms[i].element
    }
    fn arom(&self, i: usize) -> bool {
        self.mol.atoms[i].aromatic
    }
    fn deg(&self, i: usize) -> usize {
        self.mol.degree(i)
    }
    fn nbrs(&self, i: usize) -> impl Iterator<Item = (usize, BondOrder, bool)> + '_ {
        self.mol
            .neighbors(i)
            .iter()
            .map(move |&(j, e)| (j, self.mol.bonds[e].order, self.mol.is_ring_bond(e)))
    }
    fn ring(&self, i: usize) -> bool {
        self.mol.is_ring_atom(i)
    }
    fn aliphatic(&self, i: usize, el: Element) -> bool {
        self.el(i) == el && !self.arom(i)
    }
    fn has_double_to(&self, i: usize, el: Element) -> bool {
        self.nbrs(i).any(|(j, o, _)| o == BondOrder::Double && self.el(j) == el)
    }
    fn any_double(&self, i: usize) -> bool {
        self.nbrs(i).any(|(_, o, _)| o == BondOrder::Double)
    }
    fn non_single(&self, i: usize) -> bool {
        self.nbrs(i).any(|(_, o, _)| o != BondOrder::Single)
    }
}

fn in_set(el: Element, set: &[Element]) -> bool {
    set.contains(&el)
}

/// Environments matched by atom `i`; each is a whole-atom property, as in the
/// published recursive patterns.
pub fn environments(mol: &Molecule, i: usize) -> Vec<Env> {
    use Element::*;
    let v = View { mol };
    let mut out = Vec::new();
    let cnos = [C, N, O, S];
    let nos = [N, O, S];
    if v.aliphatic(i, C) && mol.atoms[i].formal_charge == 0 {
        let d = v.deg(i);
        let carbonyl = v.has_double_to(i, O);
        if d == 3 && carbonyl && v.nbrs(i).any(|(j, o, _)| o == BondOrder::Single && in_set(v.el(j), &[C, N, O])) {
            out.push(L1);
            if !v.ring(i) {
                out.push(L6);
            }
        }
        if d != 1 && !v.any_double(i) && v.nbrs(i).any(|(j, o, r)| o == BondOrder::Single && !r && v.el(j) == C) {
            out.push(L4);
        }
        if (d == 2 || d == 3) && v.nbrs(i).any(|(j, o, _)| o == BondOrder::Single && v.el(j) == C) {
            out.push(L7);
        }
        if !v.ring(i) && d != 1 && !v.non_single(i) {
            out.push(L8);
        }
        let ring_single = |set: &[Element]| {
            v.nbrs(i)
                .filter(|&(j, o, r)| r && o == BondOrder::Single && !v.arom(j) && in_set(v.el(j), set))
                .map(|(j, _, _)| j)
                .collect::<Vec<_>>()
        };
        let het = ring_single(&nos);
        let any = ring_single(&cnos);
        if het.iter().any(|&h| any.iter().any(|&a| a != h)) {
            out.push(L13);
        }
        if ring_single(&[C]).len() >= 2 {
            out.push(L15);
        }
    }
    if v.aliphatic(i, O) && v.deg(i) == 2 && !v.non_single(i) {
        out.push(L3);
    }
    if v.aliphatic(i, N) && mol.atoms[i].formal_charge == 0 {
        let d = v.deg(i);
        let lactam_ring = v.ring(i)
            && v.nbrs(i).any(|(j, _, r)| r && v.aliphatic(j, C) && v.ring(j) && v.has_double_to(j, O));
        if d != 1 && !v.any_double(i) && v.nbrs(i).all(|(j, _, _)| in_set(v.el(j), &[C, S])) && !lactam_ring {
            out.push(L5);
        }
        let lactam = v.ring(i)
            && v.nbrs(i).any(|(j, _, r)| r && v.el(j) == C && v.has_double_to(j, O))
            && v.nbrs(i).filter(|&(j, _, r)| r && in_set(v.el(j), &cnos)).count() >= 2;
        if lactam {
            out.push(L10);
        }
    }
    if v.el(i) == N && v.arom(i) && mol.atoms[i].formal_charge == 0 {
        let arom_nbrs = v
            .nbrs(i)
            .filter(|&(j, o, _)| o == BondOrder::Aromatic && in_set(v.el(j), &cnos))
            .count();
        if arom_nbrs >= 2 {
            out.push(L9);
        }
    }
    if v.aliphatic(i, S) && mol.atoms[i].formal_charge == 0 {
        if v.deg(i) == 2 && v.nbrs(i).any(|(j, o, r)| o == BondOrder::Single && !r && v.el(j) == C) {
            out.push(L11);
        }
        let oxo = v.nbrs(i).filter(|&(j, o, _)| o == BondOrder::Double && v.el(j) == O).count();
        if v.deg(i) == 4 && oxo == 2 && v.nbrs(i).any(|(j, _, _)| v.el(j) == C) {
            out.push(L12);
        }
    }
    if v.el(i) == C && v.arom(i) {
        let arom: Vec<Element> = v
            .nbrs(i)
            .filter(|&(_, o, _)| o == BondOrder::Aromatic)
            .map(|(j, _, _)| v.el(j))
            .collect();
        let het = arom.iter().filter(|e| in_set(**e, &nos)).count();
        if het >= 1 && arom.len() >= 2 {
            out.push(L14);
        }
        if arom.iter().filter(|&&e| e == C).count() >= 2 {
            out.push(L16);
        }
    }
    out
}

fn rule_matches(a: &[Env], b: &[Env]) -> bool {
    SINGLE_RULES
        .iter()
        .any(|&(x, y)| (a.contains(&x) && b.contains(&y)) || (a.contains(&y) && b.contains(&x)))
}

/// Indices of bonds cut by the rule table.
pub fn brics_bonds(mol: &Molecule) -> Vec<usize> {
    let envs: Vec<Vec<Env>> = (0..mol.atom_count()).map(|i| environments(mol, i)).collect();
    mol.bonds
        .iter()
        .enumerate()
        .filter(|&(e, b)| {
            if mol.is_ring_bond(e) {
                return false;
            }
            match b.order {
                BondOrder::Single => rule_matches(&envs[b.a], &envs[b.b]),
                BondOrder::Double => {
                    mol.atoms[b.a].element == Element::C
                        && mol.atoms[b.b].element == Element::C
                        && envs[b.a].contains(&L7)
                        && envs[b.b].contains(&L7)
                }
                _ => false,
            }
        })
        .map(|(e, _)| e)
        .collect()
}

/// Hydrogen-capped fragments after cutting every rule-matching bond,
/// deduplicated by canonical SMILES and returned in canonical order.
pub fn brics_fragments(mol: &Molecule) -> Vec<Molecule> {
    let cut = brics_bonds(mol);
    let keep = vec![true; mol.atom_count()];
    let broken = mol.induced(&keep, &cut).expect("capping a cleaved bond keeps valences");
    let mut seen = BTreeMap::new();
    for frag in broken.split_components() {
        seen.entry(canonical_smiles(&frag)).or_insert(frag);
    }
    seen.into_values().collect()
}

pub fn brics_fragment_smiles(mol: &Molecule) -> Vec<String> {
    brics_fragments(mol).iter().map(canonical_smiles).collect()
}
