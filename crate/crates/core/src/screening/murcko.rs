use crate::chem::Molecule;

/// Ring systems plus linkers: repeatedly strip non-ring atoms with at most
/// one remaining neighbour. `None` when nothing is left.
pub fn murcko_scaffold(mol: &Molecule) -> Option<Molecule> {
    let n = mol.atom_count();
    let mut keep = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| mol.degree(i)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| !mol.is_ring_atom(i) && degree[i] <= 1).collect();
    while let Some(i) = stack.pop() {
        if !keep[i] {
            continue;
        }
        keep[i] = false;
        for &(j, _) in mol.neighbors(i) {
            if keep[j] {
                degree[j] -= 1;
                if !mol.is_ring_atom(j) && degree[j] <= 1 {
                    stack.push(j);
                }
            }
        }
    }
    if !keep.iter().any(|&k| k) {
        return None;
    }
    Some(mol.induced(&keep, &[]).expect("pruning side chains keeps valences"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{canonical_smiles, canonicalize, parse_smiles};

    fn scaf(s: &str) -> Option<String> {
        murcko_scaffold(&parse_smiles(s).unwrap()).map(|m| canonical_smiles(&m))
    }

    #[test]
    fn textbook_cases() {
        assert_eq!(scaf("c1ccccc1"), Some(canonicalize("c1ccccc1").unwrap()));
        assert_eq!(scaf("CCc1ccccc1"), Some(canonicalize("c1ccccc1").unwrap()));
        assert_eq!(scaf("CCCC"), None);
        assert_eq!(scaf("C[S+](C)C"), None);
    }

    #[test]
    fn linker_sulfonium_retained() {
        assert_eq!(
            scaf("Cc1ccc(cc1)[S+](C)c1ccccc1"),
            Some(canonicalize("c1ccc(cc1)[SH+]c1ccccc1").unwrap())
        );
        assert_eq!(scaf("CC[S+]1CCCC1"), Some(canonicalize("[SH+]1CCCC1").unwrap()));
    }
}
