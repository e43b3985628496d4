use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub distance: f64,
    pub ridge_applied: bool,
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Squared Fréchet distance between two Gaussians.
pub fn frechet_gaussian(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> f64 {
    let r1 = sym_sqrt(s1);
    let inner = sym_sqrt(&(&r1 * s2 * &r1));
    let diff = mu1 - mu2;
    let d = diff.dot(&diff) + (s1 + s2 - inner * 2.0).trace();
    d.max(0.0)
}

pub fn mean_cov(rows: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mu = DVector::from_fn(d, |j, _| x.column(j).mean());
    let mut centred = x;
    for j in 0..d {
        let m = mu[j];
        centred.column_mut(j).iter_mut().for_each(|v| *v -= m);
    }
    let cov = centred.transpose() * &centred / (n as f64 - 1.0);
    (mu, cov)
}

/// Fit a Gaussian to each sample set and return their Fréchet distance.
/// When `standardize` is set both sets are z-scored with the statistics of
/// `b` (the reference). A ridge is added if either covariance is singular.
pub fn frechet_distance(a: &[Vec<f64>], b: &[Vec<f64>], standardize: bool) -> Result<FrechetResult, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::TooFew { need: 2, got: a.len().min(b.len()) });
    }
    let d = b[0].len();
    if a.iter().chain(b).any(|r| r.len() != d) {
        return Err(MetricsError::DimensionMismatch);
    }
    let (a, b) = if standardize {
        let (mu, cov) = mean_cov(b);
        let sd: Vec<f64> = (0..d)
            .map(|j| {
                let s = cov[(j, j)].sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let z = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().enumerate().map(|(j, v)| (v - mu[j]) / sd[j]).collect())
                .collect()
        };
        (z(a), z(b))
    } else {
        (a.to_vec(), b.to_vec())
    };
    let (m1, mut s1) = mean_cov(&a);
    let (m2, mut s2) = mean_cov(&b);
    let ridge_applied = min_eigenvalue(&s1) < 1e-10 || min_eigenvalue(&s2) < 1e-10;
    if ridge_applied {
        s1 += DMatrix::identity(d, d) * RIDGE;
        s2 += DMatrix::identity(d, d) * RIDGE;
    }
    Ok(FrechetResult {
        distance: frechet_gaussian(&m1, &s1, &m2, &s2),
        ridge_applied,
    })
}
