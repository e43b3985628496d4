use std::collections::HashSet;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use pagforge_core::chem::{canonical_smiles, parse_smiles, Molecule};
use pagforge_core::descriptors::{default_fingerprint, Fingerprint};
use pagforge_core::metrics::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn reference() -> &'static [Molecule] {
    static R: OnceLock<Vec<Molecule>> = OnceLock::new();
    R.get_or_init(|| {
        include_str!("../../../data/pag_reference.csv")
            .lines()
            .skip(1)
            .map(|l| parse_smiles(l.split(',').next().unwrap()).unwrap())
            .collect()
    })
}

fn zinc() -> &'static [Molecule] {
    static Z: OnceLock<Vec<Molecule>> = OnceLock::new();
    Z.get_or_init(|| {
        include_str!("../../../data/minizinc.smi")
            .lines()
            .map(|l| parse_smiles(l.split('\t').next().unwrap()).unwrap())
            .collect()
    })
}

#[test]
fn identical_sets_give_identity_values() {
    let r = reference();
    let train: HashSet<String> = r.iter().map(canonical_smiles).collect();
    let rep = compute_report("self", r, r, Some(&train), &MetricsConfig::default()).unwrap();
    assert_eq!(rep.snn, 1.0);
    assert!((rep.frag - 1.0).abs() < 1e-12, "{}", rep.frag);
    assert!((rep.scaf.unwrap() - 1.0).abs() < 1e-12);
    assert!(rep.fcd_substitute <= 1e-8, "{}", rep.fcd_substitute);
    assert_eq!(rep.novelty, Some(0.0));
    assert_eq!((rep.wasserstein_mw, rep.wasserstein_logp, rep.wasserstein_sa), (0.0, 0.0, 0.0));
    let table = render_table(&[rep]);
    assert!(table.starts_with("Comp. set"));
    assert!(table.contains("FCD-substitute"));
}

#[test]
fn one_dimensional_frechet_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 1.3).unwrap();
    let base: Vec<f64> = (0..500).map(|_| normal.sample(&mut rng)).collect();
    for delta in [0.0, 0.25, 1.0, 3.5] {
        let a: Vec<Vec<f64>> = base.iter().map(|&x| vec![x]).collect();
        let b: Vec<Vec<f64>> = base.iter().map(|&x| vec![x + delta]).collect();
        let r = frechet_distance(&a, &b, false).unwrap();
        assert!((r.distance - delta * delta).abs() < 1e-8, "{delta}: {}", r.distance);
        assert!(!r.ridge_applied);
    }
    let d = frechet_gaussian(
        &DVector::from_element(1, 2.0),
        &DMatrix::from_element(1, 1, 0.7),
        &DVector::from_element(1, -1.0),
        &DMatrix::from_element(1, 1, 0.7),
    );
    assert!((d - 9.0).abs() < 1e-12);
}

#[test]
fn frechet_unequal_variance_matches_1d_formula() {
    let d = frechet_gaussian(
        &DVector::from_element(1, 0.0),
        &DMatrix::from_element(1, 1, 4.0),
        &DVector::from_element(1, 1.0),
        &DMatrix::from_element(1, 1, 1.0),
    );
    assert!((d - (1.0 + (2.0f64 - 1.0).powi(2))).abs() < 1e-12);
}

#[test]
fn singular_covariance_gets_ridge() {
    let a: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
    let r = frechet_distance(&a, &a, false).unwrap();
    assert!(r.ridge_applied);
    assert!(r.distance < 1e-8);
}

#[test]
fn simple_set_identities() {
    let one = vec![default_fingerprint(&zinc()[0])];
    assert_eq!(intdiv(&one).unwrap(), 0.0);
    let distinct: Vec<String> = ["C", "CC", "CCC"].iter().map(|s| s.to_string()).collect();
    assert_eq!(uniqueness(&distinct).unwrap(), 1.0);
    assert_eq!(novelty(&distinct, &distinct.iter().cloned().collect()).unwrap(), 0.0);
    let a = vec![Fingerprint::from_bits(64, &[1, 2, 3]).unwrap()];
    let b = vec![Fingerprint::from_bits(64, &[10, 20]).unwrap()];
    assert_eq!(snn(&a, &b).unwrap(), 0.0);
    assert!(matches!(uniqueness(&[]), Err(MetricsError::Empty(_))));
    let acyclic = vec![parse_smiles("CCCC").unwrap()];
    assert!(matches!(scaf(&acyclic, reference()), Err(MetricsError::NoScaffolds("generated"))));
}

fn pick(idx: &[usize]) -> Vec<Molecule> {
    idx.iter().map(|&i| zinc()[i].clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounded_metrics(g in proptest::collection::vec(0usize..5000, 3..25), r in proptest::collection::vec(0usize..5000, 3..25)) {
        let gen = pick(&g);
        let refs = pick(&r);
        let train: HashSet<String> = refs.iter().map(canonical_smiles).collect();
        let rep = compute_report("p", &gen, &refs, Some(&train), &MetricsConfig::default()).unwrap();
        for v in [rep.snn, rep.frag, rep.intdiv, rep.uniqueness.unwrap(), rep.novelty.unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
        if let Some(s) = rep.scaf {
            prop_assert!((0.0..=1.0).contains(&s));
        }
        prop_assert!(rep.fcd_substitute >= 0.0 && rep.wasserstein_mw >= 0.0);
    }

    #[test]
    fn snn_is_one_for_subsets(r in proptest::collection::vec(0usize..5000, 2..30), k in 1usize..10) {
        let refs: Vec<Fingerprint> = r.iter().map(|&i| default_fingerprint(&zinc()[i])).collect();
        let gen: Vec<Fingerprint> = refs.iter().take(k).cloned().collect();
        prop_assert_eq!(snn(&gen, &refs).unwrap(), 1.0);
    }

    #[test]
    fn frechet_symmetric(seed in any::<u64>(), shift in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| n.sample(&mut rng)).collect()).collect();
        let b: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|j| n.sample(&mut rng) * (1.0 + j as f64) + shift).collect()).collect();
        let ab = frechet_distance(&a, &b, false).unwrap().distance;
        let ba = frechet_distance(&b, &a, false).unwrap().distance;
        prop_assert!((ab - ba).abs() < 1e-8 * (1.0 + ab));
    }

    #[test]
    fn wasserstein_point_masses(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        prop_assert_eq!(wasserstein1(&[a], &[b]).unwrap(), (a - b).abs());
    }
}
