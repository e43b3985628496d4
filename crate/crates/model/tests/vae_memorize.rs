use std::path::PathBuf;
use std::time::Instant;

use pagforge_core::chem::parse_smiles;
use pagforge_core::dataset::{filter_window, ingest, keep_cations, OnError, PropertyWindow, Vocabulary};
use pagforge_model::vae::*;

fn corpus() -> Vec<String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/minizinc.smi");
    let (compounds, _) = ingest(&path, OnError::Skip).unwrap();
    let (kept, _) = filter_window(keep_cations(compounds), &PropertyWindow::table1());
    kept.iter().take(200).map(|c| c.record.smiles.clone()).collect()
}

#[test]
fn memorizes_two_hundred_molecules() {
    let smiles = corpus();
    assert_eq!(smiles.len(), 200);
    let vocab = Vocabulary::build(smiles.iter().map(String::as_str), 128).unwrap();
    let cfg = VaeConfig::new(vocab.len());
    let samples: Vec<Sample> = smiles.iter().map(|s| Sample::from_smiles(&vocab, s, &cfg).unwrap()).collect();
    let vae = Vae::new(cfg, vocab, 1).unwrap();
    let tc = TrainConfig {
        lr: 3e-3,
        batch_size: 20,
        kl_max: 0.1,
        epochs: 300,
        stop_accuracy: Some(0.95),
        seed: 1,
        ..Default::default()
    };
    let start = Instant::now();
    let (vae, report) = train(vae, &samples, &tc).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(report.final_accuracy >= 0.95, "accuracy {}", report.final_accuracy);
    assert!(secs <= 600.0, "took {secs}s");

    let windows: Vec<f64> = report
        .history
        .chunks_exact(10)
        .map(|c| c.iter().map(|r| r.parts.total).sum::<f64>() / 10.0)
        .collect();
    assert!(windows.last().unwrap() < &(0.5 * windows[0]));
    let q = windows.len() / 4;
    let quarter = |k: usize| windows[k * q..(k + 1) * q].iter().sum::<f64>() / q as f64;
    assert!(quarter(0) > quarter(1) && quarter(1) > quarter(2) && quarter(2) > quarter(3));

    let mut valid = 0;
    let mut mean = vec![0.0; vae.latent_dim()];
    let mut norm_sum = 0.0;
    let mut reconstructed = 0;
    for s in &samples {
        let e = vae.encode_tokens(&s.tokens, Noise::Mean);
        let ids = vae.decode_ids(&e.mu, DecodeMode::Greedy, 0).unwrap();
        reconstructed += (ids == s.tokens) as usize;
        let text = vae.vocabulary().detokenize(&ids).unwrap();
        valid += parse_smiles(&text).is_ok() as usize;
        norm_sum += e.mu.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (m, x) in mean.iter_mut().zip(&e.mu) {
            *m += x / samples.len() as f64;
        }
    }
    assert!(valid as f64 >= 0.3 * samples.len() as f64, "valid {valid}");
    assert!(reconstructed > 0);
    let centre = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(centre < 0.5 * norm_sum / samples.len() as f64);
}
