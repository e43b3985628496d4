use pagforge_core::dataset::Vocabulary;
use pagforge_model::vae::*;
use pagforge_model::Container;

fn tiny_config(vocab: &Vocabulary) -> VaeConfig {
    VaeConfig {
        vocab_size: vocab.len(),
        embed_dim: 3,
        hidden: 4,
        latent_dim: 3,
        aux_hidden: 5,
        aux_layers: 4,
        dropout_permille: 200,
        fp_bits: 8,
        fp_radius: 2,
    }
}

fn toy() -> (Vae, Vec<Sample>) {
    let vocab = Vocabulary::build(["CO"], 8).unwrap();
    assert_eq!(vocab.len(), 5);
    let vae = Vae::new(tiny_config(&vocab), vocab, 3).unwrap();
    let samples = vec![
        Sample { smiles: "CO".into(), tokens: vec![3, 4], logp: -0.4, sa: 2.1, fp: vec![1., 0., 0., 1., 0., 1., 0., 0.] },
        Sample { smiles: "OCC".into(), tokens: vec![4, 3, 3], logp: 0.7, sa: 1.3, fp: vec![0., 1., 1., 0., 0., 0., 1., 1.] },
    ];
    (vae, samples)
}

fn central_difference(vae: &Vae, batch: &[Sample], w: &LossWeights, noise: Noise, i: usize) -> f64 {
    let h = 1e-5;
    let mut plus = vae.clone();
    plus.params_mut()[i] += h;
    let mut minus = vae.clone();
    minus.params_mut()[i] -= h;
    (plus.loss(batch, w, noise).total - minus.loss(batch, w, noise).total) / (2.0 * h)
}

#[test]
fn gradient_matches_finite_differences_per_group() {
    let (vae, batch) = toy();
    let w = LossWeights { beta: 0.7, aux: 1.0, logp_factor: 0.1 };
    for noise in [Noise::Seeded(11), Noise::Mean] {
        let (_, g) = vae.loss_and_grad(&batch, &w, noise);
        let mut worst: std::collections::BTreeMap<String, f64> = Default::default();
        for slot in vae.layout().slots() {
            for i in slot.range() {
                let n = central_difference(&vae, &batch, &w, noise, i);
                let rel = (g[i] - n).abs() / (g[i].abs() + n.abs()).max(1e-5);
                let e = worst.entry(slot.group()).or_insert(0.0);
                *e = e.max(rel);
            }
        }
        assert_eq!(
            worst.keys().cloned().collect::<Vec<_>>(),
            ["aux.fp", "aux.logp", "aux.sa", "decoder", "encoder"]
        );
        for (group, err) in &worst {
            assert!(*err < 1e-4, "{group}: relative error {err} ({noise:?})");
        }
    }
}

#[test]
fn kl_and_reconstruction_limits() {
    let (mut vae, batch) = toy();
    let slot = |v: &Vae, n: &str| v.layout().slot(n).unwrap().range();
    for name in ["encoder.mu.weight", "encoder.mu.bias", "encoder.logvar.weight", "encoder.logvar.bias"] {
        let r = slot(&vae, name);
        vae.params_mut()[r].iter_mut().for_each(|x| *x = 0.0);
    }
    let parts = vae.loss(&batch, &LossWeights::default(), Noise::Mean);
    assert_eq!(parts.kl, 0.0);

    let (wo, bo) = (slot(&vae, "decoder.out.weight"), slot(&vae, "decoder.out.bias"));
    vae.params_mut()[wo].iter_mut().for_each(|x| *x = 0.0);
    vae.params_mut()[bo].iter_mut().for_each(|x| *x = 0.0);
    let uniform = vae.loss(&batch[..1], &LossWeights::default(), Noise::Mean);
    assert!((uniform.recon - 3.0 * 5f64.ln()).abs() < 1e-12);

    let big = 800.0;
    let mut one = vae.clone();
    let bo = slot(&one, "decoder.out.bias");
    one.params_mut()[bo.start + 3] = big;
    let s = Sample { tokens: vec![3, 3, 3], ..batch[0].clone() };
    let mut v = vae.clone();
    v.params_mut().copy_from_slice(one.params());
    let parts = v.loss(&[s.clone()], &LossWeights::default(), Noise::Mean);
    assert_eq!(parts.correct, 3);
    assert!(parts.recon > 0.0);
    let only_c = Sample { tokens: vec![], ..s };
    let eos_bias = slot(&v, "decoder.out.bias").start + 2;
    v.params_mut()[eos_bias] = 2.0 * big;
    let parts = v.loss(&[only_c], &LossWeights::default(), Noise::Mean);
    assert_eq!(parts.recon, 0.0);
    assert_eq!(parts.accuracy(), 1.0);
}

#[test]
fn training_is_reproducible_and_zero_epochs_is_identity() {
    let (vae, batch) = toy();
    let cfg = TrainConfig { epochs: 5, batch_size: 1, seed: 2, ..Default::default() };
    let (a, ra) = train(vae.clone(), &batch, &cfg).unwrap();
    let (b, rb) = train(vae.clone(), &batch, &cfg).unwrap();
    assert_eq!(ra.history, rb.history);
    assert_eq!(a.params(), b.params());
    assert_eq!(ra.steps, 10);
    assert_eq!(ra.history[0].beta, 0.0);
    assert_eq!(ra.history.last().unwrap().beta, 1.0);

    let (z, rz) = train(vae.clone(), &batch, &TrainConfig { epochs: 0, ..cfg }).unwrap();
    assert_eq!(z.params(), vae.params());
    assert_eq!(rz.steps, 0);
    assert!(train(vae, &[], &cfg).is_err());
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let (vae, batch) = toy();
    let (trained, _) = train(vae, &batch, &TrainConfig { epochs: 3, seed: 5, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vae.ckpt");
    trained.to_container().save(&path).unwrap();
    let back = Vae::from_container(&Container::load(&path).unwrap()).unwrap();
    assert_eq!(back.params(), trained.params());
    assert_eq!(back.config_hash(), trained.config_hash());
    let w = LossWeights::default();
    for noise in [Noise::Mean, Noise::Seeded(9)] {
        let x = trained.loss(&batch, &w, noise);
        let y = back.loss(&batch, &w, noise);
        assert_eq!(x.total.to_bits(), y.total.to_bits());
    }
    let mut wrong = trained.to_container();
    wrong.kind = "gmm".into();
    assert!(Vae::from_container(&wrong).is_err());
}

#[test]
fn encode_and_decode_contracts() {
    let (vae, _) = toy();
    let a = vae.encode("COC", Noise::Seeded(4)).unwrap();
    let b = vae.encode("COC", Noise::Seeded(4)).unwrap();
    assert_eq!(a, b);
    assert!(a.sigma.iter().all(|&s| s > 0.0 && s.is_finite()));
    let m = vae.encode("COC", Noise::Mean).unwrap();
    assert_eq!(m.z, m.mu);
    assert!(vae.encode("CN", Noise::Mean).is_err());

    let z = &a.z;
    let g1 = vae.decode(z, DecodeMode::Greedy, 0).unwrap();
    assert_eq!(g1, vae.decode(z, DecodeMode::Greedy, 99).unwrap());
    assert_eq!(g1, vae.decode(z, DecodeMode::Temperature(0.0), 7).unwrap());
    assert!(vae.decode_ids(z, DecodeMode::Temperature(1.5), 1).unwrap().len() <= 8);
    assert!(vae.decode(&[0.0; 2], DecodeMode::Greedy, 0).is_err());

    let mut stripped = vae.clone();
    let heads: Vec<_> = vae.layout().slots().iter().filter(|s| s.group().starts_with("aux")).map(|s| s.range()).collect();
    for r in heads {
        stripped.params_mut()[r].iter_mut().for_each(|x| *x = 0.0);
    }
    for seed in 0..20 {
        let z = vae.encode("COC", Noise::Seeded(seed)).unwrap().z;
        for mode in [DecodeMode::Greedy, DecodeMode::Temperature(1.0)] {
            assert_eq!(vae.decode(&z, mode, seed).unwrap(), stripped.decode(&z, mode, seed).unwrap());
        }
    }
}

#[test]
fn samples_carry_descriptors() {
    let vocab = Vocabulary::build(["CC[S+](C)c1ccccc1"], 32).unwrap();
    let cfg = VaeConfig::new(vocab.len());
    let s = Sample::from_smiles(&vocab, "CC[S+](C)c1ccccc1", &cfg).unwrap();
    assert_eq!(s.fp.len(), 512);
    assert!(s.fp.iter().any(|&b| b == 1.0));
    assert!(s.sa > 1.0 && s.sa < 10.0);
    assert_eq!(s.tokens.len(), 14);
}
