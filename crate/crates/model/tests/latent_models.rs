use pagforge_model::classifier::*;
use pagforge_model::gmm::*;
use pagforge_model::sampler::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn blobs(centres: &[(f64, f64)], sd: f64, per: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sd).unwrap();
    centres
        .iter()
        .flat_map(|&(x, y)| (0..per).map(|_| vec![x + n.sample(&mut rng), y + n.sample(&mut rng)]).collect::<Vec<_>>())
        .collect()
}

fn assert_monotone(trace: &[f64]) {
    for w in trace.windows(2) {
        assert!(w[1] - w[0] >= -1e-9, "log-likelihood dropped: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn single_component_is_closed_form_mle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<Vec<f64>> = (0..400).map(|_| (0..3).map(|j| rng.random::<f64>() * (j + 1) as f64).collect()).collect();
    let (g, rep) = fit_gmm(&data, &GmmConfig { components: 1, restarts: 1, ..Default::default() }).unwrap();
    let n = data.len() as f64;
    for j in 0..3 {
        let mean = data.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        assert!((g.means[0][j] - mean).abs() < 1e-8);
        assert!((g.variances[0][j] - var).abs() < 1e-8);
    }
    assert_monotone(&rep.log_likelihood);
}

#[test]
fn recovers_three_component_mixture() {
    let truth = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
    let data = blobs(&truth, 0.6, 500, 2);
    let (g, rep) = fit_gmm(&data, &GmmConfig { components: 3, seed: 9, ..Default::default() }).unwrap();
    assert_eq!(rep.restart_final_ll.len(), 10);
    assert_monotone(&rep.log_likelihood);
    for &(x, y) in &truth {
        let best = g.means.iter().map(|m| ((m[0] - x).powi(2) + (m[1] - y).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        assert!(best < 0.1, "centre ({x},{y}) missed by {best}");
    }
    assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn em_monotone_on_assorted_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let uniform: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
    let skewed: Vec<Vec<f64>> = (0..300).map(|i| vec![(i as f64 / 30.0).exp(), (i % 7) as f64]).collect();
    let mut dup = blobs(&[(0.0, 0.0), (5.0, 5.0)], 1.0, 100, 4);
    dup.extend(std::iter::repeat_n(vec![9.0, -9.0], 20));
    for (data, k) in [(uniform, 5), (skewed, 4), (dup, 4)] {
        let (g, rep) = fit_gmm(&data, &GmmConfig { components: k, restarts: 3, seed: 5, ..Default::default() }).unwrap();
        assert_monotone(&rep.log_likelihood);
        assert!(g.variances.iter().flatten().all(|&v| v >= VARIANCE_FLOOR));
    }
}

#[test]
fn degenerate_component_pruned() {
    let mut data = blobs(&[(0.0, 0.0)], 1.0, 200, 6);
    data.extend(std::iter::repeat_n(vec![50.0, 50.0], 10));
    let (g, rep) = fit_gmm(&data, &GmmConfig { components: 2, restarts: 2, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(rep.pruned, 1);
    assert_eq!(g.components(), 1);
    assert!(!rep.warnings.is_empty());
}

#[test]
fn occupancy_and_normalization() {
    let g = GaussianMixture {
        weights: vec![0.2, 0.5, 0.3],
        means: vec![vec![-3.0], vec![0.0], vec![2.5]],
        variances: vec![vec![0.5], vec![1.0], vec![0.3]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let draws = g.sample_labeled(100_000, &mut rng);
    for k in 0..3 {
        let frac = draws.iter().filter(|(c, _)| *c == k).count() as f64 / 1e5;
        assert!((frac - g.weights[k]).abs() < 0.01);
    }
    let (lo, hi, steps) = (-12.0, 12.0, 24_000);
    let h = (hi - lo) / steps as f64;
    let integral: f64 = (0..=steps)
        .map(|i| {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * g.logpdf(&[lo + i as f64 * h]).exp()
        })
        .sum::<f64>()
        * h;
    assert!((integral - 1.0).abs() < 1e-3);
    assert_eq!(g.sample(10, 4), g.sample(10, 4));
}

#[test]
fn gmm_container_round_trip() {
    let data = blobs(&[(0.0, 0.0), (3.0, 3.0)], 0.5, 50, 10);
    let (g, rep) = fit_gmm(&data, &GmmConfig { components: 2, restarts: 2, ..Default::default() }).unwrap();
    let c = g.to_container(&rep);
    let back = pagforge_model::Container::from_bytes(&c.to_bytes()).unwrap();
    let (g2, rep2) = GaussianMixture::from_container(&back).unwrap();
    assert_eq!(rep, rep2);
    for (a, b) in g.means.iter().flatten().zip(g2.means.iter().flatten()) {
        assert!((a - b).abs() < 1e-5);
    }
}

fn labelled_blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = Normal::new(0.0, 1.0).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let pos = i % 3 == 0;
        let shift = if pos { 2.0 } else { -2.0 };
        x.push((0..8).map(|j| if j == 0 { shift + e.sample(&mut rng) } else { e.sample(&mut rng) }).collect());
        y.push(pos);
    }
    (x, y)
}

#[test]
fn separable_latents_classified() {
    let (x, y) = labelled_blobs(600, 11);
    let cfg = ClassifierConfig { epochs: 150, seed: 2, ..Default::default() };
    let (m, rep) = train_classifier(&x, &y, &cfg).unwrap();
    assert!(rep.mean_balanced_accuracy >= 0.98, "{}", rep.mean_balanced_accuracy);
    assert_eq!(rep.confusion.total(), 600);
    assert_eq!(rep.fold_balanced_accuracy.len(), 5);
    let p = m.predict(&[1e6; 8]);
    assert!(p > 0.0 && p < 1.0);
    let text = rep.render("LUMO > -5 eV", "LUMO <= -5 eV");
    assert!(text.contains("Predicted label") && text.contains("True label"));

    let c = m.to_container(&rep, &cfg);
    let (m2, rep2) = LatentClassifier::from_container(&pagforge_model::Container::from_bytes(&c.to_bytes()).unwrap()).unwrap();
    assert_eq!(rep, rep2);
    assert!((m.predict(&x[0]) - m2.predict(&x[0])).abs() < 1e-4);
}

#[test]
fn permuted_labels_give_chance() {
    let (x, y) = labelled_blobs(1200, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut shuffled = y.clone();
    use rand::seq::SliceRandom;
    shuffled.shuffle(&mut rng);
    let cfg = ClassifierConfig { epochs: 60, seed: 3, ..Default::default() };
    let (_, rep) = train_classifier(&x, &shuffled, &cfg).unwrap();
    assert!((rep.mean_balanced_accuracy - 0.5).abs() <= 0.05, "{}", rep.mean_balanced_accuracy);
}

fn toy() -> GaussianMixture {
    GaussianMixture {
        weights: vec![0.6, 0.4],
        means: vec![vec![-1.5], vec![2.0]],
        variances: vec![vec![0.8], vec![0.5]],
    }
}

fn logistic(z: &[f64]) -> f64 {
    1.0 / (1.0 + (-2.0 * z[0]).exp())
}

fn ident(z: &[f64]) -> String {
    format!("{:.3}", z[0])
}

fn always(_: &str) -> bool {
    true
}

#[test]
fn identity_classifier_accepts_everything() {
    let one = |_: &[f64]| 1.0;
    let spec = AttributeSpec::single(&one, Polarity::Positive);
    let cfg = SamplerConfig { target_accepted: 500, max_draws: 10_000, ..Default::default() };
    let run = class_sample(&toy(), &spec, &ident, &always, &cfg).unwrap();
    assert_eq!(run.acceptance_rate, 1.0);
    assert_eq!(run.accepted.len(), 500);
}

#[test]
fn near_zero_classifier() {
    let zero = |_: &[f64]| 0.0;
    let spec = AttributeSpec::single(&zero, Polarity::Positive);
    let cfg = SamplerConfig { target_accepted: 10, max_draws: 2000, ..Default::default() };
    assert_eq!(class_sample(&toy(), &spec, &ident, &always, &cfg), Err(SamplerError::NoAcceptances(2000)));

    let eps = |_: &[f64]| 0.05;
    let spec = AttributeSpec::single(&eps, Polarity::Positive);
    let cfg = SamplerConfig { target_accepted: 1_000_000, max_draws: 40_000, ..Default::default() };
    let run = class_sample(&toy(), &spec, &ident, &always, &cfg).unwrap();
    assert_eq!(run.total_draws, 40_000);
    assert!((run.acceptance_rate - 0.05).abs() < 0.005);
}

#[test]
fn accepted_distribution_matches_quadrature() {
    let g = toy();
    let spec = AttributeSpec::single(&logistic, Polarity::Positive);
    let cfg = SamplerConfig { seed: 21, target_accepted: usize::MAX, max_draws: 50_000, ..Default::default() };
    let run = class_sample(&g, &spec, &ident, &always, &cfg).unwrap();
    for d in &run.draws {
        assert!(d.acceptance_prob > 0.0 && d.acceptance_prob <= 1.0);
        assert_eq!(d.accepted, d.uniform < d.acceptance_prob);
    }
    let (lo, hi, bins) = (-4.5, 4.5, 20);
    let width = (hi - lo) / bins as f64;
    let target = |z: f64| g.logpdf(&[z]).exp() * logistic(&[z]);
    let integrate = |a: f64, b: f64| {
        let steps = 2000;
        let h = (b - a) / steps as f64;
        (0..steps).map(|i| target(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let mut mass: Vec<f64> = (0..bins).map(|k| integrate(lo + k as f64 * width, lo + (k + 1) as f64 * width)).collect();
    mass[0] += integrate(-30.0, lo);
    mass[bins - 1] += integrate(hi, 30.0);
    let z_total: f64 = mass.iter().sum();
    let mut observed = vec![0.0; bins];
    for a in &run.accepted {
        let k = (((a.z[0] - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        observed[k] += 1.0;
    }
    let n = run.accepted.len() as f64;
    let chi2: f64 = observed.iter().zip(&mass).map(|(o, m)| {
        let e = n * m / z_total;
        (o - e).powi(2) / e
    }).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2} p {p}");
    assert!(run.mean_accepted_score >= run.mean_proposal_score);
}

#[test]
fn sampling_deterministic_across_workers() {
    let spec = AttributeSpec::single(&logistic, Polarity::Negative);
    let cfg = SamplerConfig { seed: 4, target_accepted: 700, max_draws: 100_000, lanes: 4, round_size: 100, workers: 1 };
    let a = class_sample(&toy(), &spec, &ident, &always, &cfg).unwrap();
    let b = class_sample(&toy(), &spec, &ident, &always, &SamplerConfig { workers: 3, ..cfg }).unwrap();
    assert_eq!(a, SampleRun { config: a.config, ..b });
    let c = class_sample(&toy(), &spec, &ident, &always, &SamplerConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(a.accepted, c.accepted);
}
