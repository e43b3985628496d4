//! Canonical ranking and SMILES writing.
//!
//! Ranks come from iterative refinement of atom invariants by sorted
//! neighbor ranks; remaining ties are broken by promoting one atom of the
//! lowest tied class and refining again. The writer walks the graph depth
//! first from the lowest-ranked atom, visiting neighbors in rank order.

use std::collections::BTreeMap;

use super::graph::{BondOrder, Molecule};
use super::smiles::atom_demand;

type Invariant = (u8, usize, u8, i8, bool, bool);

/// Canonical rank per atom; a permutation of `0..n`.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    if n == 0 {
        return Vec::new();
    }
    let invariants: Vec<Invariant> = (0..n)
        .map(|i| {
            let a = &mol.atoms[i];
            (
                a.element.atomic_number(),
                mol.degree(i),
                a.h_count,
                a.formal_charge,
                a.aromatic,
                mol.is_ring_atom(i),
            )
        })
        .collect();
    let mut ranks = dense_rank(&invariants);
    ranks = refine(mol, ranks);
    loop {
        let classes = class_count(&ranks);
        if classes == n {
            return ranks;
        }
        // lowest rank shared by more than one atom
        let mut counts = BTreeMap::new();
        for &r in &ranks {
            *counts.entry(r).or_insert(0usize) += 1;
        }
        let tied = *counts.iter().find(|(_, &c)| c > 1).unwrap().0;
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        // doubling keeps room for the promoted atom below its class
        let mut split: Vec<(usize, usize)> = ranks.iter().map(|&r| (r * 2 + 1, 0)).collect();
        split[chosen] = (tied * 2, 0);
        ranks = dense_rank(&split);
        ranks = refine(mol, ranks);
    }
}

fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let n = ranks.len();
    let mut classes = class_count(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..n)
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, e)| (ranks[j], bond_code(mol.bonds[e].order)))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_rank(&keys);
        let next_classes = class_count(&next);
        ranks = next;
        if next_classes == classes {
            return ranks;
        }
        classes = next_classes;
    }
}

fn bond_code(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

fn dense_rank<T: Ord + Clone>(keys: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap()).collect()
}

fn class_count(ranks: &[usize]) -> usize {
    let mut r = ranks.to_vec();
    r.sort_unstable();
    r.dedup();
    r.len()
}

pub fn canonical_smiles(mol: &Molecule) -> String {
    let ranks = canonical_ranks(mol);
    let (labels, count) = mol.components();
    let mut parts: Vec<String> = (0..count)
        .map(|c| {
            let start = (0..mol.atom_count())
                .filter(|&i| labels[i] == c)
                .min_by_key(|&i| ranks[i])
                .unwrap();
            write_component(mol, &ranks, start)
        })
        .collect();
    parts.sort();
    parts.join(".")
}

/// SMILES for the whole molecule in an arbitrary but valid atom order given
/// by `ranks` (used by tests to emit non-canonical spellings).
pub fn smiles_with_ranks(mol: &Molecule, ranks: &[usize]) -> String {
    let (labels, count) = mol.components();
    (0..count)
        .map(|c| {
            let start = (0..mol.atom_count())
                .filter(|&i| labels[i] == c)
                .min_by_key(|&i| ranks[i])
                .unwrap();
            write_component(mol, ranks, start)
        })
        .collect::<Vec<_>>()
        .join(".")
}

struct Walk {
    order: Vec<usize>,
    children: Vec<Vec<usize>>,
    /// ring closures per atom: (partner, bond index)
    closures: Vec<Vec<(usize, usize)>>,
}

fn sorted_neighbors(mol: &Molecule, ranks: &[usize], atom: usize) -> Vec<(usize, usize)> {
    let mut nb = mol.neighbors(atom).to_vec();
    nb.sort_by_key(|&(j, _)| ranks[j]);
    nb
}

fn walk(mol: &Molecule, ranks: &[usize], start: usize) -> Walk {
    let n = mol.atom_count();
    let mut w = Walk {
        order: Vec::new(),
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
    };
    let mut visited = vec![false; n];
    let mut used_bond = vec![false; mol.bonds.len()];
    dfs(mol, ranks, start, &mut visited, &mut used_bond, &mut w);
    w
}

fn dfs(mol: &Molecule, ranks: &[usize], atom: usize, visited: &mut [bool], used_bond: &mut [bool], w: &mut Walk) {
    visited[atom] = true;
    w.order.push(atom);
    for (nb, e) in sorted_neighbors(mol, ranks, atom) {
        if used_bond[e] {
            continue;
        }
        used_bond[e] = true;
        if visited[nb] {
            w.closures[atom].push((nb, e));
            w.closures[nb].push((atom, e));
        } else {
            w.children[atom].push(nb);
            dfs(mol, ranks, nb, visited, used_bond, w);
        }
    }
}

fn write_component(mol: &Molecule, ranks: &[usize], start: usize) -> String {
    let w = walk(mol, ranks, start);
    let mut position = vec![usize::MAX; mol.atom_count()];
    for (i, &a) in w.order.iter().enumerate() {
        position[a] = i;
    }
    let mut out = String::new();
    let mut digits: BTreeMap<usize, usize> = BTreeMap::new(); // bond -> digit
    let mut free: Vec<bool> = vec![true; 100];
    emit(mol, &w, &position, start, None, &mut digits, &mut free, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    mol: &Molecule,
    w: &Walk,
    position: &[usize],
    atom: usize,
    via: Option<usize>,
    digits: &mut BTreeMap<usize, usize>,
    free: &mut [bool],
    out: &mut String,
) {
    if let Some(e) = via {
        out.push_str(bond_symbol(mol, e));
    }
    out.push_str(&atom_symbol(mol, atom));

    // closing digits first (partners emitted earlier), then openings
    let mut closing: Vec<(usize, usize)> = Vec::new();
    let mut opening: Vec<(usize, usize)> = Vec::new();
    for &(partner, e) in &w.closures[atom] {
        if position[partner] < position[atom] {
            closing.push((position[partner], e));
        } else {
            opening.push((position[partner], e));
        }
    }
    closing.sort_unstable();
    opening.sort_unstable();
    for &(_, e) in &closing {
        let d = digits.remove(&e).expect("ring closure opened earlier");
        write_digit(out, d);
        free[d] = true;
    }
    for &(_, e) in &opening {
        let d = (1..free.len()).find(|&d| free[d]).expect("ring closure digits exhausted");
        free[d] = false;
        digits.insert(e, d);
        out.push_str(bond_symbol(mol, e));
        write_digit(out, d);
    }

    let kids = &w.children[atom];
    for (i, &child) in kids.iter().enumerate() {
        let e = mol.neighbors(atom).iter().find(|&&(nb, _)| nb == child).unwrap().1;
        if i + 1 < kids.len() {
            out.push('(');
            emit(mol, w, position, child, Some(e), digits, free, out);
            out.push(')');
        } else {
            emit(mol, w, position, child, Some(e), digits, free, out);
        }
    }
}

fn write_digit(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d:02}"));
    }
}

fn bond_symbol(mol: &Molecule, e: usize) -> &'static str {
    let b = &mol.bonds[e];
    match b.order {
        BondOrder::Aromatic => "",
        BondOrder::Single if mol.atoms[b.a].aromatic && mol.atoms[b.b].aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

pub fn atom_symbol(mol: &Molecule, i: usize) -> String {
    let a = &mol.atoms[i];
    let mut used = 0u32;
    let mut has_pi = false;
    for &(_, e) in mol.neighbors(i) {
        let b = &mol.bonds[e];
        match b.order {
            BondOrder::Aromatic => {
                used += 1;
                if b.kekule == BondOrder::Double {
                    has_pi = true;
                }
            }
            o => used += o.integral().unwrap() as u32,
        }
    }
    let symbol = if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    };
    if a.element.is_organic_subset() && a.formal_charge == 0 {
        if let Some(d) = atom_demand(a.element, 0, a.aromatic, false, used) {
            if d.implicit_h == a.h_count && d.needs_double == (a.aromatic && has_pi) {
                return symbol;
            }
        }
    }
    let mut s = String::from("[");
    s.push_str(&symbol);
    match a.h_count {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}
