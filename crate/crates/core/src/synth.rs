//! Scripted enumeration of the bundled corpora.
//!
//! The real training sets (filtered ZINC cations, patent-derived PAG cations
//! with DFT orbital energies) cannot be redistributed, so the repository
//! ships synthetic stand-ins assembled from onium cores and substituent
//! fragments. LUMO values attached to the sulfonium reference set come from a
//! transparent structure-based formula plus seeded noise; they are labels for
//! exercising the pipeline, not physical predictions.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chem::{canonical_smiles, parse_smiles, smiles_with_ranks, BondOrder, Element, Molecule};

const ARYL: &[&str] = &[
    "c1ccccc1",
    "c1ccccc1",
    "c1ccccc1",
    "c1ccc(C)cc1",
    "c1ccc(OC)cc1",
    "c1ccc(F)cc1",
    "c1ccc(Cl)cc1",
    "c1ccc(Br)cc1",
    "c1ccc(I)cc1",
    "c1ccc(C(C)(C)C)cc1",
    "c1ccc(O)cc1",
    "c1ccc(SC)cc1",
    "c1ccc(C(F)(F)F)cc1",
    "c1ccc2ccccc2c1",
    "c1cccc2ccccc12",
    "c1ccc(cc1)C(C)=O",
    "c1ccsc1",
    "c1ccoc1",
    "c1ccc(Sc2ccccc2)cc1",
    "c1ccc(Oc2ccccc2)cc1",
    "c1ccc(cc1)[Si](C)(C)C",
    "c1ccc(C#N)cc1",
    "c1ccc(N(C)C)cc1",
    "c1ccc(cc1)C(=O)OC",
    "c1ccc(cc1)OC(C)=O",
    "c1ccc(C)cc1C",
    "c1cc(C)cc(C)c1",
    "c1ccc(-c2ccccc2)cc1",
    "c1ccc(cc1)OCC",
    "c1ccc2c(c1)sc1ccccc12",
    "c1ccncc1",
    "c1cnc2ccccc2c1",
];

const ALKYL: &[&str] = &[
    "C",
    "C",
    "C",
    "CC",
    "CC",
    "CCC",
    "CCCC",
    "CC(C)C",
    "C(C)C",
    "CCCCCC",
    "CC(=O)c1ccccc1",
    "CC(=O)c1ccc(C)cc1",
    "CC(=O)OC",
    "CCO",
    "CCOC",
    "CC#N",
    "C1CCCCC1",
    "CC=C",
    "CC#C",
    "CCC(F)(F)F",
    "C(F)(F)C(F)(F)F",
    "CCN(C)C",
    "CCNC(C)=O",
    "CC(=O)N(C)C",
    "Cc1ccccc1",
    "CC(=O)C",
    "CCCCCCCC",
    "CC(C)(C)C",
];

/// Ring sulfonium cores; `R` marks the exocyclic substituent. High ring
/// numbers keep clear of the digits used inside substituents.
const CYCLIC_SULFONIUM: &[&str] = &[
    "[S+]%91(R)CCCC%91",
    "[S+]%91(R)CCCCC%91",
    "[S+]%91(R)c%92ccccc%92-c%92ccccc%92%91",
    "[S+]%91(R)c%92ccccc%92Oc%92ccccc%92%91",
    "[S+]%91(R)c%92ccccc%92Sc%92ccccc%92%91",
    "[S+]%91(R)c%92ccccc%92C(=O)c%92ccccc%92%91",
    "[S+]%91(R)CCOCC%91",
    "[S+]%91(R)c%92ccccc%92CC%91",
    "[S+]%91(R)CC(=O)c%92ccccc%92%91",
];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap()
}

fn substituent(rng: &mut ChaCha8Rng, aryl_bias: f64) -> &'static str {
    if rng.random_bool(aryl_bias) {
        pick(rng, ARYL)
    } else {
        pick(rng, ALKYL)
    }
}

fn sulfonium(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.35) {
        let core = pick(rng, CYCLIC_SULFONIUM);
        core.replace('R', substituent(rng, 0.5))
    } else {
        let bias = rng.random_range(0.2..0.9);
        format!(
            "[S+]({})({}){}",
            substituent(rng, bias),
            substituent(rng, bias),
            substituent(rng, bias)
        )
    }
}

fn other_cation(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..9) {
        0 => format!("[N+](C)(C)(C){}", substituent(rng, 0.4)),
        1 => format!("[NH+](C)(C){}", substituent(rng, 0.4)),
        2 => format!("[NH3+]{}", substituent(rng, 0.3)),
        3 => format!("[NH2+](C){}", substituent(rng, 0.5)),
        4 => format!("[n+]%93({})ccccc%93", substituent(rng, 0.3)),
        5 => format!("[n+]%93({})ccn(C)c%93", pick(rng, ALKYL)),
        6 => format!("[I+]({}){}", pick(rng, ARYL), pick(rng, ARYL)),
        7 => format!("[P+](C)(C)(C){}", substituent(rng, 0.5)),
        _ => "[CH+]1C=CC=CC=C1".to_string(),
    }
}

fn neutral(rng: &mut ChaCha8Rng) -> String {
    let (a, b) = (substituent(rng, 0.6), substituent(rng, 0.6));
    match rng.random_range(0..5) {
        0 => format!("S({a}){b}"),
        1 => format!("O({a}){b}"),
        2 => format!("C(=O)({a}){b}"),
        3 => format!("N(C)({a}){b}"),
        _ => a.to_string(),
    }
}

fn salt_or_odd(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => format!("{}.[O-]S(=O)(=O)C(F)(F)F", sulfonium(rng)),
        1 => "[O-]S(=O)(=O)C(F)(F)F".to_string(),
        2 => format!("[S+](C)(C)c1ccc(cc1)[S+](C)C"),
        3 => format!("{}.[Cl-]", other_cation(rng)),
        _ => format!("[S+]({})({})c1ccc(cc1){}", pick(rng, ARYL), pick(rng, ARYL), pick(rng, ARYL)),
    }
}

/// Alkynyl sulfoniums; the long members sit on the heavy-atom boundary of
/// the property window.
pub fn polyyne_sulfonium(units: usize) -> String {
    format!("[S+](C)(C){}", "C#C".repeat(units))
}

/// Re-emit a SMILES string with a random atom order.
pub fn respell(rng: &mut ChaCha8Rng, smiles: &str) -> String {
    let mol = parse_smiles(smiles).expect("generator emits valid SMILES");
    let mut ranks: Vec<usize> = (0..mol.atom_count()).collect();
    for i in (1..ranks.len()).rev() {
        let j = rng.random_range(0..=i);
        ranks.swap(i, j);
    }
    smiles_with_ranks(&mol, &ranks)
}

fn emit(rng: &mut ChaCha8Rng, smiles: String) -> String {
    if rng.random_bool(0.3) {
        respell(rng, &smiles)
    } else {
        smiles
    }
}

/// Mini-ZINC: a mixture of cations (mostly onium), neutrals, salts and
/// out-of-window molecules, plus the boundary probes.
pub fn mini_zinc(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let push = |smiles: String, out: &mut Vec<(String, String)>| {
        let id = format!("ZSYN{:06}", out.len() + 1);
        out.push((smiles, id));
    };
    for units in 1..=38 {
        push(polyyne_sulfonium(units), &mut out);
    }
    push(boundary_80_atoms(), &mut out);
    while out.len() < n {
        let roll: f64 = rng.random();
        let smiles = if roll < 0.45 {
            sulfonium(&mut rng)
        } else if roll < 0.65 {
            other_cation(&mut rng)
        } else if roll < 0.90 {
            neutral(&mut rng)
        } else {
            salt_or_odd(&mut rng)
        };
        let smiles = emit(&mut rng, smiles);
        push(smiles, &mut out);
    }
    out
}

/// 80 heavy atoms: a sulfonium carrying three polyyne arms.
pub fn boundary_80_atoms() -> String {
    format!(
        "[S+](C#C{})(C#C{})C#C{}C",
        "C#C".repeat(12),
        "C#C".repeat(12),
        "C#C".repeat(12)
    )
}

/// Sulfonium reference set with synthetic LUMO energies (eV).
pub fn reference_set(n: usize, seed: u64) -> Vec<(String, String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.25).unwrap();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let smiles = sulfonium(&mut rng);
        let mol = parse_smiles(&smiles).expect("generator emits valid SMILES");
        if !seen.insert(canonical_smiles(&mol)) {
            continue;
        }
        let lumo = synthetic_lumo(&mol) + noise.sample(&mut rng);
        let smiles = emit(&mut rng, smiles);
        out.push((smiles, format!("PSYN{:04}", out.len() + 1), (lumo * 1000.0).round() / 1000.0));
    }
    out
}

/// Deterministic part of the synthetic LUMO label: conjugation and
/// electron-withdrawing groups lower it, alkyl and donor groups raise it.
pub fn synthetic_lumo(mol: &Molecule) -> f64 {
    let rings = &mol.ring_info().rings;
    let aromatic_rings = rings
        .iter()
        .filter(|r| r.iter().all(|&a| mol.atoms[a].aromatic))
        .count() as f64;
    let mut aryl_on_s = 0.0;
    let mut alkyl_on_s = 0.0;
    let mut ring_s = 0.0;
    for (i, a) in mol.atoms.iter().enumerate() {
        if a.element == Element::S && a.formal_charge == 1 {
            if mol.is_ring_atom(i) {
                ring_s += 1.0;
            }
            for &(j, _) in mol.neighbors(i) {
                if mol.atoms[j].aromatic {
                    aryl_on_s += 1.0;
                } else {
                    alkyl_on_s += 1.0;
                }
            }
        }
    }
    let carbonyl = mol
        .bonds
        .iter()
        .filter(|b| {
            b.order == BondOrder::Double
                && [b.a, b.b].iter().any(|&x| mol.atoms[x].element == Element::O)
        })
        .count() as f64;
    let halogen = mol
        .atoms
        .iter()
        .filter(|a| matches!(a.element, Element::F | Element::Cl | Element::Br | Element::I))
        .count()
        .min(4) as f64;
    let donor = mol
        .atoms
        .iter()
        .enumerate()
        .filter(|(i, a)| {
            (a.element == Element::N && a.formal_charge == 0 && !a.aromatic)
                || (a.element == Element::O
                    && mol.neighbors(*i).iter().all(|&(_, e)| mol.bonds[e].order == BondOrder::Single))
        })
        .count() as f64;
    -3.55 - 0.45 * aryl_on_s - 0.22 * aromatic_rings - 0.35 * carbonyl - 0.15 * halogen - 0.35 * ring_s
        + 0.12 * alkyl_on_s
        + 0.15 * donor
}

/// Corpus for SMILES round-trip checks: onium cations, neutrals, salts and
/// a set of heteroaromatic classics, spelled in random atom orders.
pub fn roundtrip_corpus(n: usize, seed: u64) -> Vec<String> {
    const CLASSICS: &[&str] = &[
        "c1ccc2[nH]ccc2c1",
        "c1ccc2ncccc2c1",
        "c1ncc2nc[nH]c2n1",
        "O=c1cccc[nH]1",
        "c1ccoc1",
        "c1ccsc1",
        "c1cc[nH]c1",
        "c1cnc[nH]1",
        "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
        "CC(=O)Oc1ccccc1C(=O)O",
        "c1ccc2c(c1)ccc1ccccc12",
        "C1CC2CCC1C2",
        "C12CC3CC(C1)CC(C3)C2",
        "C1CCC2(CC1)CCCC2",
        "[O-][N+](=O)c1ccc(cc1)[S+](C)C",
        "c1ccc(cc1)[I+]c1ccccc1",
        "C[n+]1ccccc1",
        "CC[N+](CC)(CC)CC",
        "OC(=O)C(F)(F)F",
        "N#Cc1ccccc1",
        "C=CC(=O)OC",
        "C#CCO",
        "c1ccc2c(c1)Cc1ccccc1-2",
        "c1ccc2c(c1)[nH]c1ccccc12",
        "O=C1c2ccccc2C(=O)c2ccccc12",
        "c1ccc2sccc2c1",
        "Cc1ccc(cc1)S(=O)(=O)[O-]",
        "C[Si](C)(C)C",
        "BrCCBr",
        "ClC(Cl)(Cl)Cl",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for s in CLASSICS {
        out.push(respell(&mut rng, s));
    }
    while out.len() < n {
        let roll: f64 = rng.random();
        let smiles = if roll < 0.4 {
            sulfonium(&mut rng)
        } else if roll < 0.6 {
            other_cation(&mut rng)
        } else if roll < 0.9 {
            neutral(&mut rng)
        } else {
            salt_or_odd(&mut rng)
        };
        out.push(respell(&mut rng, &smiles));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::heavy_atom_count;

    #[test]
    fn generators_emit_valid_smiles() {
        for (s, _) in mini_zinc(300, 1) {
            parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        }
        for (s, _, l) in reference_set(50, 2) {
            parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(l.is_finite());
        }
        for s in roundtrip_corpus(100, 3) {
            parse_smiles(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
        }
    }

    #[test]
    fn boundary_probes_have_expected_size() {
        let m79 = parse_smiles(&polyyne_sulfonium(38)).unwrap();
        assert_eq!(heavy_atom_count(&m79), 79);
        let m80 = parse_smiles(&boundary_80_atoms()).unwrap();
        assert_eq!(heavy_atom_count(&m80), 80);
    }

    #[test]
    fn deterministic() {
        assert_eq!(mini_zinc(100, 9), mini_zinc(100, 9));
    }
}
