use pagforge_core::chem::{parse_smiles, ring_stats};
use pagforge_core::descriptors::*;
use pagforge_core::synth;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zinc() -> Vec<&'static str> {
    include_str!("../../../data/minizinc.smi")
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect()
}

#[test]
fn sa_in_range_over_bundled_corpus() {
    for s in zinc() {
        let sa = sa_score(&parse_smiles(s).unwrap());
        assert!((1.0..=10.0).contains(&sa), "{s}: {sa}");
    }
}

#[test]
fn ethane_simpler_than_tetracyclic_cage() {
    let cage = parse_smiles("C1C2CC3CC1C4C2CC3C4").unwrap();
    assert_eq!(ring_stats(&cage).ring_count, 4);
    let (spiro, bridge) = spiro_and_bridgeheads(&cage);
    assert!(spiro + bridge > 0);
    let ethane = sa_score(&parse_smiles("CC").unwrap());
    assert!(ethane < sa_score(&cage), "{ethane} vs {}", sa_score(&cage));
}

#[test]
fn sa_deterministic() {
    let m = parse_smiles("c1ccc(cc1)[S+](c1ccccc1)c1ccccc1").unwrap();
    assert_eq!(sa_score(&m).to_bits(), sa_score(&m).to_bits());
}

fn bitset(width: usize) -> impl Strategy<Value = Fingerprint> {
    proptest::collection::vec(0..width, 0..40).prop_map(move |bits| Fingerprint::from_bits(width, &bits).unwrap())
}

proptest! {
    #[test]
    fn similarity_laws(a in bitset(256), b in bitset(256)) {
        let d = dice(&a, &b).unwrap();
        let t = tanimoto(&a, &b).unwrap();
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        prop_assert_eq!(t, tanimoto(&b, &a).unwrap());
        prop_assert!(d >= t - 1e-15);
        prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&t));
        if a.count_ones() > 0 {
            prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
            prop_assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        }
        let both = a.and_count(&b).unwrap() as f64;
        let total = (a.count_ones() + b.count_ones()) as f64;
        if total > 0.0 {
            prop_assert!((d - 2.0 * both / total).abs() < 1e-15);
        }
    }

    #[test]
    fn descriptors_survive_respelling(i in 0usize..5000, seed in any::<u64>()) {
        let s = zinc()[i];
        let r = synth::respell(&mut ChaCha8Rng::seed_from_u64(seed), s);
        let a = DescriptorVector::compute(&parse_smiles(s).unwrap());
        let b = DescriptorVector::compute(&parse_smiles(&r).unwrap());
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a.fluorine_fraction));
        prop_assert!(a.mw > 0.0);
    }

    #[test]
    fn fingerprints_survive_respelling(i in 0usize..5000, seed in any::<u64>()) {
        let s = zinc()[i];
        let r = synth::respell(&mut ChaCha8Rng::seed_from_u64(seed), s);
        prop_assert_eq!(
            default_fingerprint(&parse_smiles(s).unwrap()),
            default_fingerprint(&parse_smiles(&r).unwrap())
        );
    }
}
