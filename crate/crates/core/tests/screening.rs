use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use pagforge_core::chem::{canonical_smiles, canonicalize, parse_smiles, permute_atoms, Molecule};
use pagforge_core::descriptors::{default_fingerprint, Fingerprint};
use pagforge_core::screening::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zinc() -> &'static [Molecule] {
    static Z: OnceLock<Vec<Molecule>> = OnceLock::new();
    Z.get_or_init(|| {
        include_str!("../../../data/minizinc.smi")
            .lines()
            .map(|l| parse_smiles(l.split('\t').next().unwrap()).unwrap())
            .collect()
    })
}

fn mols(v: &[&str]) -> Vec<(String, Molecule)> {
    v.iter()
        .enumerate()
        .map(|(i, s)| (format!("m{i}"), parse_smiles(s).unwrap()))
        .collect()
}

fn pairs(v: &[(String, Molecule)]) -> impl Iterator<Item = (&str, &Molecule)> {
    v.iter().map(|(i, m)| (i.as_str(), m))
}

#[test]
fn chem_filter_examples() {
    let inputs: Vec<(String, String)> = ["C[S+](C)C", "CC[S+](C)C.CCN", "FC(F)(F)C(F)(F)[S+](C)C"]
        .iter()
        .enumerate()
        .map(|(i, s)| (i.to_string(), s.to_string()))
        .collect();
    let v = chem_filters(&inputs, &HashSet::new(), &FilterConfig::default());
    assert!(v[0].passed && v[0].failed_rules.is_empty());
    assert_eq!(v[1].failed_rules, vec![FilterRule::ContainsAmine]);
    assert_eq!(v[2].failed_rules, vec![FilterRule::FluorineRich]);
    let m = parse_smiles("FC(F)(F)C(F)(F)[S+](C)C").unwrap();
    assert_eq!(pagforge_core::descriptors::fluorine_fraction(&m), 0.5);
}

#[test]
fn verdicts_order_independent_and_stable_under_refiltering() {
    let inputs: Vec<(String, String)> = include_str!("../../../data/minizinc.smi")
        .lines()
        .take(600)
        .map(|l| {
            let mut p = l.split('\t');
            let s = p.next().unwrap().to_string();
            (p.next().unwrap().to_string(), s)
        })
        .collect();
    let train: HashSet<String> = inputs.iter().step_by(7).map(|(_, s)| canonicalize(s).unwrap()).collect();
    let cfg = FilterConfig::default();
    let v = chem_filters(&inputs, &train, &cfg);
    let mut shuffled = inputs.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    let mut w = chem_filters(&shuffled, &train, &cfg);
    w.sort_by_key(|x| inputs.iter().position(|(id, _)| *id == x.id).unwrap());
    assert_eq!(v, w);
    let passed: Vec<(String, String)> = v
        .iter()
        .filter(|x| x.passed)
        .map(|x| (x.id.clone(), x.smiles.clone()))
        .collect();
    assert!(!passed.is_empty());
    assert!(chem_filters(&passed, &train, &cfg).iter().all(|x| x.passed));
}

#[test]
fn murcko_idempotent_on_full_corpus() {
    for m in zinc() {
        if let Some(s) = murcko_scaffold(m) {
            let again = murcko_scaffold(&s).expect("scaffold of a scaffold is non-empty");
            assert_eq!(canonical_smiles(&again), canonical_smiles(&s));
        }
    }
}

const TOY: [&str; 5] = [
    "C[S+]1CCCC1",
    "CC[S+]1CCCC1",
    "CCC[S+]1CCCC1",
    "c1ccc(cc1)[S+](c1ccccc1)c1ccccc1",
    "Cc1ccc(cc1)[S+](c1ccccc1)c1ccccc1",
];

#[test]
fn toy_scaffold_summary() {
    let gen = mols(&TOY);
    let reference = mols(&["c1ccc(cc1)[S+](c1ccccc1)c1ccccc1"]);
    let s = scaffold_summary(pairs(&gen), pairs(&reference));
    let g = s.generated;
    assert_eq!(
        (g.molecules, g.scaffolds, g.sulfonium_scaffolds, g.novel_sulfonium_scaffolds),
        (5, 2, 2, Some(1))
    );
    let novel: Vec<_> = s.records.iter().filter(|r| r.is_novel).collect();
    assert_eq!(novel[0].scaffold, canonicalize("[SH+]1CCCC1").unwrap());
    assert_eq!(novel[0].parents, vec!["m0", "m1", "m2"]);
    assert!(s.to_table().contains("Novel sulfonium scaffolds"));

    let same = scaffold_summary(pairs(&gen), pairs(&gen));
    assert_eq!(same.generated.novel_sulfonium_scaffolds, Some(0));
}

#[test]
fn scaffold_pipeline_repeatable() {
    let gen: Vec<(String, Molecule)> = zinc().iter().take(400).enumerate().map(|(i, m)| (i.to_string(), m.clone())).collect();
    let reference = mols(&TOY);
    let a = scaffold_summary(pairs(&gen), pairs(&reference));
    let b = scaffold_summary(pairs(&gen), pairs(&reference));
    assert_eq!(a, b);
}

fn fp(bits: impl IntoIterator<Item = usize>) -> Fingerprint {
    Fingerprint::from_bits(256, &bits.into_iter().collect::<Vec<_>>()).unwrap()
}

#[test]
fn binning_cap_and_seed() {
    let reference = vec![fp(0..20)];
    let generated: Vec<Fingerprint> = (0..250).map(|_| fp((0..11).chain(100..109))).collect();
    let cfg = BinningConfig {
        seed: 11,
        ..Default::default()
    };
    let a = similarity_binning(&generated, &reference, &cfg).unwrap();
    assert_eq!(a.max_similarity[0], 0.55);
    assert_eq!(a.selected.len(), 100);
    assert_eq!(a.bins[5].members, 250);
    assert_eq!(a.bins[5].selected, 100);
    assert!(a.bins.iter().enumerate().all(|(k, b)| k == 5 || b.members == 0));
    let b = similarity_binning(&generated, &reference, &cfg).unwrap();
    assert_eq!(a.selected, b.selected);
    let c = similarity_binning(&generated, &reference, &BinningConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.selected, c.selected);
}

#[test]
fn binning_excludes_exact_matches() {
    let set: Vec<Fingerprint> = zinc().iter().take(50).map(default_fingerprint).collect();
    let r = similarity_binning(&set, &set, &BinningConfig::default()).unwrap();
    assert!(r.selected.is_empty());
    assert_eq!(r.excluded_exact.len(), 50);
    assert!(matches!(
        similarity_binning(&set, &[], &BinningConfig::default()),
        Err(ScreeningError::EmptyReference)
    ));
}

#[test]
fn dice_histogram_cases() {
    let m = default_fingerprint(&parse_smiles("C[S+](C)C").unwrap());
    let h = dice_histogram(&[m.clone(), m.clone()], 0.05).unwrap();
    assert_eq!(h.pairs, 1);
    assert_eq!(h.counts[0], 1);
    assert_eq!(h.mode_range(), (0.0, 0.05));

    let mut set = vec![fp(0..5); 6];
    set.push(fp(50..60));
    let h = dice_histogram(&set, 0.05).unwrap();
    assert_eq!(h.mode_bin, 0);
    assert_eq!(h.counts[0], 15);
    assert_eq!(*h.counts.last().unwrap(), 6);
    assert_eq!(h.counts.len(), 20);
    assert!(h.to_csv().starts_with("bin_low,bin_high,count\n0.0000,0.0500,15\n"));
    assert!(matches!(dice_histogram(&set[..1], 0.05), Err(ScreeningError::TooFewMolecules(1))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_conserves_pairs(idx in proptest::collection::vec(0usize..5000, 2..40), w in 0.01f64..0.5) {
        let fps: Vec<Fingerprint> = idx.iter().map(|&i| default_fingerprint(&zinc()[i])).collect();
        let h = dice_histogram(&fps, w).unwrap();
        let n = fps.len() as u64;
        prop_assert_eq!(h.counts.iter().sum::<u64>(), n * (n - 1) / 2);
        prop_assert!(h.counts.iter().all(|&c| c <= h.counts[h.mode_bin]));
        prop_assert!(h.counts[..h.mode_bin].iter().all(|&c| c < h.counts[h.mode_bin]));
    }

    #[test]
    fn binning_is_capped_subset(
        gen in proptest::collection::vec(0usize..5000, 1..80),
        refs in proptest::collection::vec(0usize..5000, 1..10),
        cap in 1usize..10,
        seed in any::<u64>(),
    ) {
        let g: Vec<Fingerprint> = gen.iter().map(|&i| default_fingerprint(&zinc()[i])).collect();
        let r: Vec<Fingerprint> = refs.iter().map(|&i| default_fingerprint(&zinc()[i])).collect();
        let cfg = BinningConfig { cap, seed, ..Default::default() };
        let out = similarity_binning(&g, &r, &cfg).unwrap();
        let uniq: BTreeSet<usize> = out.selected.iter().copied().collect();
        prop_assert_eq!(uniq.len(), out.selected.len());
        prop_assert!(out.selected.iter().all(|&i| i < g.len() && out.max_similarity[i] < 1.0));
        prop_assert!(out.bins.iter().all(|b| b.selected <= cap && b.selected == b.members.min(cap)));
        prop_assert_eq!(out.bins.iter().map(|b| b.members).sum::<usize>() + out.excluded_exact.len(), g.len());
    }

    #[test]
    fn brics_invariant_under_permutation(i in 0usize..5000, seed in any::<u64>()) {
        let m = &zinc()[i];
        let mut perm: Vec<usize> = (0..m.atom_count()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = permute_atoms(m, &perm);
        prop_assert_eq!(brics_fragment_smiles(m), brics_fragment_smiles(&p));
        prop_assert_eq!(
            murcko_scaffold(m).map(|s| canonical_smiles(&s)),
            murcko_scaffold(&p).map(|s| canonical_smiles(&s))
        );
    }
}
