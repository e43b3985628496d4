use std::io::Write;
use std::sync::OnceLock;

use pagforge_core::chem::{parse_smiles, ring_stats, Element};
use pagforge_core::dataset::*;
use pagforge_core::descriptors::{crippen_logp, molecular_weight, sa_score};
use pagforge_core::synth;
use proptest::prelude::*;

fn zinc() -> Vec<Compound> {
    static ZINC: OnceLock<Vec<Compound>> = OnceLock::new();
    ZINC.get_or_init(|| {
        ingest_str(include_str!("../../../data/minizinc.smi"), "minizinc", OnError::Fail)
            .unwrap()
            .0
    })
    .clone()
}

/// Second implementation: each rule evaluated straight from the SMILES.
fn brute_keep(smiles: &str, w: &PropertyWindow) -> bool {
    let m = parse_smiles(smiles).unwrap();
    let heavy = m.atoms.iter().filter(|a| a.element != Element::H).count();
    let r = ring_stats(&m);
    let within = |v: f64, lo: f64, hi: f64| v >= lo && v <= hi;
    within(heavy as f64, w.num_atoms.min as f64, w.num_atoms.max as f64)
        && within(crippen_logp(&m), w.logp.min, w.logp.max)
        && within(sa_score(&m), w.sa.min, w.sa.max)
        && within(molecular_weight(&m), w.mw.min, w.mw.max)
        && within(r.ring_count as f64, w.ring_count.min as f64, w.ring_count.max as f64)
        && within(r.max_ring_size as f64, w.max_ring_size.min as f64, w.max_ring_size.max as f64)
        && m
            .atoms
            .iter()
            .all(|a| a.element == Element::H || w.allowed_elements.contains(&a.element))
}

fn ids(v: &[Compound]) -> Vec<String> {
    v.iter().map(|c| c.record.id.clone()).collect()
}

#[test]
fn window_matches_brute_force_oracle() {
    let w = PropertyWindow::table1();
    let all = zinc();
    let expected: Vec<String> = all
        .iter()
        .filter(|c| brute_keep(&c.record.smiles, &w))
        .map(|c| c.record.id.clone())
        .collect();
    let (kept, report) = filter_window(all, &w);
    assert_eq!(ids(&kept), expected);
    assert_eq!(report.kept + report.dropped, report.input);
}

#[test]
fn num_atoms_boundary() {
    let w = PropertyWindow::table1();
    let ok = Compound::from_smiles(&synth::polyyne_sulfonium(38), "79").unwrap();
    let big = Compound::from_smiles(&synth::boundary_80_atoms(), "80").unwrap();
    assert_eq!(ok.mol.atom_count(), 79);
    assert_eq!(big.mol.atoms.iter().filter(|a| a.element != Element::H).count(), 80);
    assert!(w.violations(&ok).is_empty(), "{:?}", w.violations(&ok));
    assert!(w.violations(&big).contains(&WindowRule::NumAtoms));

    let mut relaxed = w.clone();
    relaxed.mw.max = 2000.0;
    assert_eq!(relaxed.violations(&big), vec![WindowRule::NumAtoms]);
}

#[test]
fn phosphonium_rejected_by_vocabulary() {
    let w = PropertyWindow::table1();
    let p = Compound::from_smiles("C[P+](C)(C)C", "p").unwrap();
    assert_eq!(w.violations(&p), vec![WindowRule::Elements]);
    let s = Compound::from_smiles("C[S+](C)C", "s").unwrap();
    assert!(w.violations(&s).is_empty());
}

#[test]
fn window_file_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    std::fs::write(&path, serde_json::to_string(&PropertyWindow::table1()).unwrap()).unwrap();
    assert_eq!(PropertyWindow::load(&path).unwrap(), PropertyWindow::table1());
    let mut bad = PropertyWindow::table1();
    bad.sa.min = 9.0;
    std::fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
    assert!(matches!(PropertyWindow::load(&path), Err(DatasetError::Config(..))));
}

#[test]
fn ingest_from_file_with_csv_reference_set() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "smiles,id,lumo_ev").unwrap();
    writeln!(f, "C[S+](C)c1ccccc1,A,-5.0").unwrap();
    writeln!(f, "C[S+](C)C,B,-4.1").unwrap();
    drop(f);
    let (recs, rep) = ingest(&path, OnError::Fail).unwrap();
    assert_eq!(rep.records, 2);
    let labels = label_lumo(&recs.iter().map(|c| c.record.clone()).collect::<Vec<_>>(), -5.0).unwrap();
    assert_eq!(labels, vec![true, false]);
}

#[test]
fn bundled_reference_set_is_in_window() {
    let (refs, _) = ingest_str(include_str!("../../../data/pag_reference.csv"), "ref", OnError::Fail).unwrap();
    let n = refs.len();
    let (kept, _) = filter_window(keep_cations(refs), &PropertyWindow::table1());
    assert_eq!(kept.len(), n);
}

#[test]
fn vocabulary_covers_filtered_corpus_within_length() {
    let (kept, _) = filter_window(keep_cations(zinc()), &PropertyWindow::table1());
    let vocab = Vocabulary::build(kept.iter().map(|c| c.canonical.as_str()), DEFAULT_MAX_LEN).unwrap();
    for c in &kept {
        let ids = vocab.tokenize(&c.canonical).unwrap();
        assert_eq!(vocab.detokenize(&ids).unwrap(), c.canonical);
    }
}

fn subset() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0usize..5000, 0..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filter_idempotent_and_commutes_with_cations(idx in subset()) {
        let all = zinc();
        let pick: Vec<Compound> = idx.iter().map(|&i| all[i].clone()).collect();
        let w = PropertyWindow::table1();
        let (once, _) = filter_window(pick.clone(), &w);
        let (twice, _) = filter_window(once.clone(), &w);
        prop_assert_eq!(ids(&once), ids(&twice));
        let a = keep_cations(filter_window(pick.clone(), &w).0);
        let b = filter_window(keep_cations(pick), &w).0;
        prop_assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn tokenizer_round_trip(idx in subset()) {
        let all = zinc();
        let strings: Vec<&str> = idx.iter().map(|&i| all[i].record.smiles.as_str()).collect();
        let vocab = Vocabulary::build(strings.iter().copied(), 512).unwrap();
        for s in strings {
            prop_assert_eq!(vocab.detokenize(&vocab.tokenize(s).unwrap()).unwrap(), s);
        }
    }
}
