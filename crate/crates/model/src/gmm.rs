//! Diagonal-covariance Gaussian mixture fitted by expectation maximization.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::container::{Container, ContainerError, Tensor};

pub const VARIANCE_FLOOR: f64 = 1e-6;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error)]
pub enum GmmError {
    #[error("{points} points cannot support {components} components")]
    TooFewPoints { points: usize, components: usize },
    #[error("latent vectors have inconsistent or zero dimension")]
    BadDimension,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("every component degenerated")]
    AllDegenerate,
    #[error(transparent)]
    Container(#[from] ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub components: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            components: 100,
            max_iters: 500,
            tol: 1e-6,
            restarts: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: GmmConfig,
    /// Mean per-point log-likelihood after each EM iteration of the kept restart.
    pub log_likelihood: Vec<f64>,
    pub restart_final_ll: Vec<f64>,
    pub best_restart: usize,
    pub iterations: usize,
    pub converged: bool,
    pub pruned: usize,
    pub warnings: Vec<String>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl GaussianMixture {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn component_log_density(&self, k: usize, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, m), v) in z.iter().zip(&self.means[k]).zip(&self.variances[k]) {
            let d = x - m;
            s += LN_2PI + v.ln() + d * d / v;
        }
        -0.5 * s
    }

    fn weighted_log_densities(&self, z: &[f64], out: &mut [f64]) {
        for k in 0..self.components() {
            out[k] = self.weights[k].ln() + self.component_log_density(k, z);
        }
    }

    pub fn logpdf(&self, z: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.components()];
        self.weighted_log_densities(z, &mut buf);
        log_sum_exp(&buf)
    }

    /// Draws with the component index of each draw.
    pub fn sample_labeled<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<(usize, Vec<f64>)> {
        let pick = WeightedIndex::new(&self.weights).expect("weights form a distribution");
        (0..n)
            .map(|_| {
                let k = pick.sample(rng);
                (k, self.sample_component(k, rng))
            })
            .collect()
    }

    pub fn sample_component<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        self.means[k]
            .iter()
            .zip(&self.variances[k])
            .map(|(m, v)| {
                let e: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * e
            })
            .collect()
    }

    pub fn sample_one<R: Rng>(&self, pick: &WeightedIndex<f64>, rng: &mut R) -> Vec<f64> {
        let k = pick.sample(rng);
        self.sample_component(k, rng)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_labeled(n, &mut rng).into_iter().map(|(_, z)| z).collect()
    }

    pub fn mean_log_likelihood(&self, data: &[Vec<f64>]) -> f64 {
        data.iter().map(|z| self.logpdf(z)).sum::<f64>() / data.len() as f64
    }

    pub fn to_container(&self, report: &FitReport) -> Container {
        let k = self.components();
        let d = self.dim();
        let meta = serde_json::json!({ "fit": report });
        let mut c = Container::new("gmm", meta);
        c.push(Tensor::from_f64("weights", vec![k], &self.weights));
        c.push(Tensor::from_f64("means", vec![k, d], &self.means.concat()));
        c.push(Tensor::from_f64("variances", vec![k, d], &self.variances.concat()));
        c
    }

    /// Loads a mixture; weights are renormalized after the f32 round trip.
    pub fn from_container(c: &Container) -> Result<(Self, FitReport), GmmError> {
        c.expect_kind("gmm")?;
        let w = c.tensor("weights")?;
        let m = c.tensor("means")?;
        let v = c.tensor("variances")?;
        if m.shape.len() != 2 || m.shape != v.shape || w.shape != [m.shape[0]] {
            return Err(ContainerError::Format("inconsistent gmm shapes".into()).into());
        }
        let d = m.shape[1];
        let mut weights = w.to_f64();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x /= total);
        let rows = |t: &Tensor| t.to_f64().chunks(d.max(1)).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let report: FitReport = serde_json::from_value(c.meta["fit"].clone())
            .map_err(|e| ContainerError::Meta(e.to_string()))?;
        Ok((
            GaussianMixture {
                weights,
                means: rows(m),
                variances: rows(v).into_iter().map(|r| r.into_iter().map(|x| x.max(VARIANCE_FLOOR)).collect()).collect(),
            },
            report,
        ))
    }
}

fn validate(data: &[Vec<f64>], k: usize) -> Result<usize, GmmError> {
    if k == 0 || data.len() < k {
        return Err(GmmError::TooFewPoints {
            points: data.len(),
            components: k,
        });
    }
    let d = data[0].len();
    if d == 0 || data.iter().any(|r| r.len() != d) {
        return Err(GmmError::BadDimension);
    }
    if data.iter().flatten().any(|x| !x.is_finite()) {
        return Err(GmmError::NonFinite);
    }
    Ok(d)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: centres drawn with probability proportional to the
/// squared distance from the nearest centre chosen so far.
fn kmeans_pp(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centres = vec![data[rng.random_range(0..n)].clone()];
    let mut best: Vec<f64> = data.iter().map(|x| sq_dist(x, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = best.iter().sum();
        let idx = if total > 0.0 {
            WeightedIndex::new(&best).unwrap().sample(rng)
        } else {
            rng.random_range(0..n)
        };
        centres.push(data[idx].clone());
        for (b, x) in best.iter_mut().zip(data) {
            *b = b.min(sq_dist(x, centres.last().unwrap()));
        }
    }
    centres
}

fn global_variance(data: &[Vec<f64>], d: usize) -> Vec<f64> {
    let n = data.len() as f64;
    (0..d)
        .map(|j| {
            let m = data.iter().map(|r| r[j]).sum::<f64>() / n;
            (data.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR)
        })
        .collect()
}

struct Run {
    gmm: GaussianMixture,
    trace: Vec<f64>,
    converged: bool,
}

fn em(data: &[Vec<f64>], init: GaussianMixture, max_iters: usize, tol: f64) -> Run {
    let n = data.len();
    let k = init.components();
    let d = init.dim();
    let mut gmm = init;
    let mut trace = Vec::new();
    let mut resp = vec![0.0; n * k];
    let mut buf = vec![0.0; k];
    let mut converged = false;
    for _ in 0..max_iters {
        let mut ll = 0.0;
        for (i, z) in data.iter().enumerate() {
            gmm.weighted_log_densities(z, &mut buf);
            let lse = log_sum_exp(&buf);
            ll += lse;
            for c in 0..k {
                resp[i * k + c] = (buf[c] - lse).exp();
            }
        }
        let ll = ll / n as f64;
        if let Some(&prev) = trace.last() {
            trace.push(ll);
            if ll - prev < tol {
                converged = true;
                break;
            }
        } else {
            trace.push(ll);
        }
        for c in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + c]).sum();
            gmm.weights[c] = nk / n as f64;
            if nk <= 1e-300 {
                continue;
            }
            let mut mean = vec![0.0; d];
            for (i, z) in data.iter().enumerate() {
                let r = resp[i * k + c];
                for j in 0..d {
                    mean[j] += r * z[j];
                }
            }
            mean.iter_mut().for_each(|m| *m /= nk);
            let mut var = vec![0.0; d];
            for (i, z) in data.iter().enumerate() {
                let r = resp[i * k + c];
                for j in 0..d {
                    let e = z[j] - mean[j];
                    var[j] += r * e * e;
                }
            }
            for v in var.iter_mut() {
                *v = (*v / nk).max(VARIANCE_FLOOR);
            }
            gmm.means[c] = mean;
            gmm.variances[c] = var;
        }
    }
    // The responsibilities above were computed for the parameters that
    // produced the last trace entry; report the final parameters' value.
    if !converged {
        let ll = gmm.mean_log_likelihood(data);
        trace.push(ll);
    }
    Run { gmm, trace, converged }
}

/// Fit with several k-means++ restarts and keep the best final likelihood.
/// Components whose weight vanished or whose variances all hit the floor
/// are removed afterwards.
pub fn fit_gmm(data: &[Vec<f64>], cfg: &GmmConfig) -> Result<(GaussianMixture, FitReport), GmmError> {
    let d = validate(data, cfg.components)?;
    let base_var = global_variance(data, d);
    let mut best: Option<(usize, Run)> = None;
    let mut finals = Vec::new();
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let k = cfg.components;
        let init = GaussianMixture {
            weights: vec![1.0 / k as f64; k],
            means: kmeans_pp(data, k, &mut rng),
            variances: vec![base_var.clone(); k],
        };
        let run = em(data, init, cfg.max_iters, cfg.tol);
        let last = *run.trace.last().unwrap();
        finals.push(last);
        if best.as_ref().is_none_or(|(_, b)| last > *b.trace.last().unwrap()) {
            best = Some((r, run));
        }
    }
    let (best_restart, run) = best.unwrap();
    let mut warnings = Vec::new();
    let mut kept = GaussianMixture {
        weights: Vec::new(),
        means: Vec::new(),
        variances: Vec::new(),
    };
    for c in 0..run.gmm.components() {
        let floored = run.gmm.variances[c].iter().all(|&v| v <= VARIANCE_FLOOR);
        let empty = run.gmm.weights[c] < 1e-12;
        if floored || empty {
            warnings.push(format!(
                "pruned component {c}: {}",
                if empty { "no responsibility" } else { "all variances at floor" }
            ));
            continue;
        }
        kept.weights.push(run.gmm.weights[c]);
        kept.means.push(run.gmm.means[c].clone());
        kept.variances.push(run.gmm.variances[c].clone());
    }
    if kept.weights.is_empty() {
        return Err(GmmError::AllDegenerate);
    }
    let total: f64 = kept.weights.iter().sum();
    kept.weights.iter_mut().for_each(|w| *w /= total);
    let pruned = run.gmm.components() - kept.components();
    Ok((
        kept,
        FitReport {
            config: *cfg,
            iterations: run.trace.len(),
            log_likelihood: run.trace,
            restart_final_ll: finals,
            best_restart,
            converged: run.converged,
            pruned,
            warnings,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_at_mean() {
        let g = GaussianMixture {
            weights: vec![1.0],
            means: vec![vec![1.0, -2.0]],
            variances: vec![vec![0.5, 2.0]],
        };
        let expect = -0.5 * ((2.0 * std::f64::consts::PI * 0.5).ln() + (2.0 * std::f64::consts::PI * 2.0).ln());
        assert!((g.logpdf(&[1.0, -2.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_few_points() {
        let data = vec![vec![0.0]; 3];
        let cfg = GmmConfig {
            components: 4,
            ..Default::default()
        };
        assert!(matches!(fit_gmm(&data, &cfg), Err(GmmError::TooFewPoints { .. })));
    }
}
