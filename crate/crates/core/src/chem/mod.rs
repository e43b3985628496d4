//! Molecular graphs: SMILES reading and writing, ring perception,
//! aromaticity and charge accounting.

mod canon;
mod element;
mod graph;
mod kekule;
mod rings;
mod smiles;

use thiserror::Error;

pub use canon::{atom_symbol, canonical_ranks, canonical_smiles, smiles_with_ranks};
pub use element::{Element, UnknownElement};
pub use graph::{Atom, AtomSpec, Bond, BondOrder, Molecule};
pub use rings::RingInfo;
pub use smiles::parse_smiles;


#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty SMILES")]
    Empty,
    #[error("unclosed ring bond {number} opened at position {pos}")]
    UnclosedRing { number: u32, pos: usize },
    #[error("unmatched bracket at position {pos}")]
    UnmatchedBracket { pos: usize },
    #[error("unmatched parenthesis at position {pos}")]
    UnmatchedParen { pos: usize },
    #[error("unknown element '{symbol}' at position {pos}")]
    UnknownElement { symbol: String, pos: usize },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: &'static str },
    #[error("{what} are not supported (position {pos})")]
    Unsupported { pos: usize, what: &'static str },
    #[error("valence violation on atom {atom} ({element}, charge {charge}): valence {valence}")]
    Valence {
        atom: usize,
        element: Element,
        charge: i8,
        valence: u32,
    },
    #[error("aromatic system cannot be kekulized")]
    NotKekulizable,
    #[error("aromatic bond between {a} and {b} involves a non-aromatic atom")]
    AromaticBondOutsideRing { a: usize, b: usize },
    #[error("invalid bond {a}-{b}")]
    InvalidBond { a: usize, b: usize },
    #[error("duplicate bond {a}-{b}")]
    DuplicateBond { a: usize, b: usize },
}

pub fn ring_stats(mol: &Molecule) -> RingInfo {
    mol.ring_info().clone()
}

pub fn net_charge(mol: &Molecule) -> i32 {
    mol.net_charge()
}

/// Parse then re-emit canonically.
pub fn canonicalize(smiles: &str) -> Result<String, ChemError> {
    parse_smiles(smiles).map(|m| canonical_smiles(&m))
}

/// Same molecule with atoms renumbered: atom `i` moves to `perm[i]`.
pub fn permute_atoms(mol: &Molecule, perm: &[usize]) -> Molecule {
    let n = mol.atom_count();
    let specs_in = mol.atom_specs();
    let mut specs = specs_in.clone();
    for i in 0..n {
        specs[perm[i]] = specs_in[i].clone();
    }
    let bonds: Vec<_> = mol
        .kekule_bonds()
        .into_iter()
        .map(|(a, b, o)| (perm[a], perm[b], o))
        .collect();
    let mut out = Molecule::from_kekule(&specs, &bonds).expect("permutation preserves validity");
    out.id = mol.id.clone();
    out
}
