//! One-hidden-layer attribute classifier over latent vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{Container, ContainerError, Tensor};

/// Outputs are clamped this far inside the unit interval.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{0} latents but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("class with {count} members cannot be split into {folds} folds")]
    TooFewForFolds { count: usize, folds: usize },
    #[error("latent vectors have inconsistent or zero dimension")]
    BadDimension,
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hidden: 100,
            epochs: 300,
            lr: 1e-2,
            weight_decay: 1e-4,
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentClassifier {
    pub dim: usize,
    pub hidden: usize,
    /// Input standardization learned from the training data.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl LatentClassifier {
    fn hidden_layer(&self, z: &[f64], x: &mut Vec<f64>, h: &mut [f64]) {
        x.clear();
        x.extend(z.iter().zip(&self.shift).zip(&self.scale).map(|((v, m), s)| (v - m) / s));
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.dim..(j + 1) * self.dim];
            let a = self.b1[j] + row.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>();
            *hj = a.max(0.0);
        }
    }

    fn logit(&self, h: &[f64]) -> f64 {
        self.b2 + self.w2.iter().zip(h).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Probability of the positive class, strictly inside (0, 1).
    pub fn predict(&self, z: &[f64]) -> f64 {
        let mut x = Vec::with_capacity(self.dim);
        let mut h = vec![0.0; self.hidden];
        self.hidden_layer(z, &mut x, &mut h);
        sigmoid(self.logit(&h)).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }

    pub fn to_container(&self, report: &CvReport, cfg: &ClassifierConfig) -> Container {
        let mut c = Container::new(
            "classifier",
            serde_json::json!({ "config": cfg, "cv": report, "dim": self.dim, "hidden": self.hidden }),
        );
        c.push(Tensor::from_f64("shift", vec![self.dim], &self.shift));
        c.push(Tensor::from_f64("scale", vec![self.dim], &self.scale));
        c.push(Tensor::from_f64("w1", vec![self.hidden, self.dim], &self.w1));
        c.push(Tensor::from_f64("b1", vec![self.hidden], &self.b1));
        c.push(Tensor::from_f64("w2", vec![self.hidden], &self.w2));
        c.push(Tensor::from_f64("b2", vec![1], &[self.b2]));
        c
    }

    pub fn from_container(c: &Container) -> Result<(Self, CvReport), ClassifierError> {
        c.expect_kind("classifier")?;
        let meta = |k: &str| -> Result<usize, ContainerError> {
            c.meta[k].as_u64().map(|v| v as usize).ok_or_else(|| ContainerError::Meta(format!("missing {k}")))
        };
        let dim = meta("dim")?;
        let hidden = meta("hidden")?;
        let get = |name: &str, n: usize| -> Result<Vec<f64>, ContainerError> {
            let t = c.tensor(name)?;
            if t.data.len() != n {
                return Err(ContainerError::BadShape {
                    name: name.into(),
                    expected: n,
                    got: t.data.len(),
                });
            }
            Ok(t.to_f64())
        };
        let report: CvReport =
            serde_json::from_value(c.meta["cv"].clone()).map_err(|e| ContainerError::Meta(e.to_string()))?;
        Ok((
            LatentClassifier {
                dim,
                hidden,
                shift: get("shift", dim)?,
                scale: get("scale", dim)?,
                w1: get("w1", hidden * dim)?,
                b1: get("b1", hidden)?,
                w2: get("w2", hidden)?,
                b2: get("b2", 1)?[0],
            },
            report,
        ))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Counts as `[[true negative, false positive], [false negative, true positive]]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[usize; 2]; 2],
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        self.counts[truth as usize][predicted as usize] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_normalized(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for r in 0..2 {
            let n = (self.counts[r][0] + self.counts[r][1]) as f64;
            for c in 0..2 {
                out[r][c] = if n > 0.0 { self.counts[r][c] as f64 / n } else { 0.0 };
            }
        }
        out
    }

    /// Mean of per-class recall.
    pub fn balanced_accuracy(&self) -> f64 {
        let n = self.row_normalized();
        (n[0][0] + n[1][1]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub fold_balanced_accuracy: Vec<f64>,
    pub mean_balanced_accuracy: f64,
    pub confusion: Confusion,
    pub confusion_normalized: [[f64; 2]; 2],
}

impl CvReport {
    /// Confusion matrix as a two-by-two grid: true label rows, predicted
    /// label columns, each cell showing the row fraction and the raw count.
    pub fn render(&self, negative: &str, positive: &str) -> String {
        let n = self.confusion_normalized;
        let c = self.confusion.counts;
        let w = negative.len().max(positive.len()).max(9) + 6;
        let mut out = format!("{:w$} {:>18}\n", "", "Predicted label");
        out.push_str(&format!("{:w$} {:>18} {:>18}\n", "True label", negative, positive));
        for (r, name) in [negative, positive].iter().enumerate() {
            out.push_str(&format!(
                "{:w$} {:>18} {:>18}\n",
                name,
                format!("{:.3} ({})", n[r][0], c[r][0]),
                format!("{:.3} ({})", n[r][1], c[r][1])
            ));
        }
        out.push_str(&format!(
            "balanced accuracy {:.3} over {} folds (N = {})\n",
            self.mean_balanced_accuracy,
            self.folds,
            self.confusion.total()
        ));
        out
    }
}

fn check(latents: &[Vec<f64>], labels: &[bool]) -> Result<usize, ClassifierError> {
    if latents.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch(latents.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(ClassifierError::SingleClass);
    }
    let d = latents[0].len();
    if d == 0 || latents.iter().any(|z| z.len() != d) {
        return Err(ClassifierError::BadDimension);
    }
    Ok(d)
}

/// Full-batch Adam on inverse-frequency weighted cross-entropy.
pub fn fit(latents: &[Vec<f64>], labels: &[bool], cfg: &ClassifierConfig, seed: u64) -> Result<LatentClassifier, ClassifierError> {
    let d = check(latents, labels)?;
    let n = latents.len() as f64;
    let shift: Vec<f64> = (0..d).map(|j| latents.iter().map(|z| z[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let v = latents.iter().map(|z| (z[j] - shift[j]).powi(2)).sum::<f64>() / n;
            if v > 1e-12 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let h = cfg.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init1 = Normal::new(0.0, (2.0 / d as f64).sqrt()).unwrap();
    let init2 = Normal::new(0.0, (1.0 / h as f64).sqrt()).unwrap();
    let mut m = LatentClassifier {
        dim: d,
        hidden: h,
        shift,
        scale,
        w1: (0..h * d).map(|_| init1.sample(&mut rng)).collect(),
        b1: vec![0.0; h],
        w2: (0..h).map(|_| init2.sample(&mut rng)).collect(),
        b2: 0.0,
    };
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let class_w = [n / (2.0 * (n - pos)), n / (2.0 * pos)];

    let np = h * d + h + h + 1;
    let mut adam_m = vec![0.0; np];
    let mut adam_v = vec![0.0; np];
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut x = Vec::with_capacity(d);
    let mut hid = vec![0.0; h];
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(latents.len());
    for z in latents {
        xs.push(z.iter().zip(&m.shift).zip(&m.scale).map(|((v, a), s)| (v - a) / s).collect());
    }
    for t in 1..=cfg.epochs {
        let mut g = vec![0.0; np];
        for (i, z) in latents.iter().enumerate() {
            m.hidden_layer(z, &mut x, &mut hid);
            let p = sigmoid(m.logit(&hid));
            let y = labels[i] as u8 as f64;
            let dl = class_w[labels[i] as usize] * (p - y) / n;
            let (gw1, rest) = g.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += dl;
            for j in 0..h {
                gw2[j] += dl * hid[j];
                if hid[j] > 0.0 {
                    let dh = dl * m.w2[j];
                    gb1[j] += dh;
                    let row = &mut gw1[j * d..(j + 1) * d];
                    for (r, v) in row.iter_mut().zip(&xs[i]) {
                        *r += dh * v;
                    }
                }
            }
        }
        let lr_t = cfg.lr * (1.0 - f64::powi(b2, t as i32)).sqrt() / (1.0 - f64::powi(b1, t as i32));
        let mut k = 0;
        let mut step = |p: &mut f64, gi: f64, decay: bool| {
            let gi = if decay { gi + cfg.weight_decay * *p } else { gi };
            adam_m[k] = b1 * adam_m[k] + (1.0 - b1) * gi;
            adam_v[k] = b2 * adam_v[k] + (1.0 - b2) * gi * gi;
            *p -= lr_t * adam_m[k] / (adam_v[k].sqrt() + eps);
            k += 1;
        };
        for (p, gi) in m.w1.iter_mut().zip(&g[..h * d]) {
            step(p, *gi, true);
        }
        for (p, gi) in m.b1.iter_mut().zip(&g[h * d..h * d + h]) {
            step(p, *gi, false);
        }
        for (p, gi) in m.w2.iter_mut().zip(&g[h * d + h..h * d + 2 * h]) {
            step(p, *gi, true);
        }
        step(&mut m.b2, g[np - 1], false);
    }
    Ok(m)
}

/// Stratified k-fold cross-validation, then a final model on all data.
pub fn train_classifier(latents: &[Vec<f64>], labels: &[bool], cfg: &ClassifierConfig) -> Result<(LatentClassifier, CvReport), ClassifierError> {
    check(latents, labels)?;
    let k = cfg.folds.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fold_of = vec![0usize; labels.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(ClassifierError::TooFewForFolds { count: idx.len(), folds: k });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    let mut confusion = Confusion::default();
    let mut per_fold = Vec::with_capacity(k);
    for f in 0..k {
        let (mut tr_x, mut tr_y, mut te) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..labels.len() {
            if fold_of[i] == f {
                te.push(i);
            } else {
                tr_x.push(latents[i].clone());
                tr_y.push(labels[i]);
            }
        }
        let model = fit(&tr_x, &tr_y, cfg, cfg.seed.wrapping_add(1 + f as u64))?;
        let mut fold = Confusion::default();
        for i in te {
            let pred = model.predict(&latents[i]) >= 0.5;
            fold.add(labels[i], pred);
            confusion.add(labels[i], pred);
        }
        per_fold.push(fold.balanced_accuracy());
    }
    let model = fit(latents, labels, cfg, cfg.seed)?;
    Ok((
        model,
        CvReport {
            folds: k,
            mean_balanced_accuracy: per_fold.iter().sum::<f64>() / k as f64,
            fold_balanced_accuracy: per_fold,
            confusion_normalized: confusion.row_normalized(),
            confusion,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_arithmetic() {
        let mut c = Confusion::default();
        for (t, p) in [(false, false), (false, false), (false, true), (true, true)] {
            c.add(t, p);
        }
        assert_eq!(c.total(), 4);
        assert!((c.balanced_accuracy() - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_class_rejected() {
        let z = vec![vec![0.0]; 10];
        assert!(matches!(
            train_classifier(&z, &[true; 10], &ClassifierConfig::default()),
            Err(ClassifierError::SingleClass)
        ));
    }
}
