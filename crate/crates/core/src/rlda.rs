//! Linear discriminant analysis with the pooled covariance shrunk toward a
//! scaled identity.
//!
//! With class-centered samples `z_k` and pooled covariance `S`, the
//! shrinkage target is `nu * I` with `nu = trace(S) / d`. The automatic
//! intensity is the analytic Ledoit-Wolf / Schaefer-Strimmer estimate
//!
//! ```text
//! gamma = n / (n-1)^3 * sum_ij sum_k (z_ki z_kj - mean_k(z_ki z_kj))^2
//!         / ( sum_{i != j} s_ij^2 + sum_i (s_ii - nu)^2 )
//! ```
//!
//! clipped to `[0, 1]`. Class priors are treated as equal in the bias.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shrinkage {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RldaModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
    pub class_means: [Vec<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

struct Pooled {
    means: [DVector<f64>; 2],
    counts: [usize; 2],
    /// class-centered samples, one column each
    centered: DMatrix<f64>,
    cov: DMatrix<f64>,
}

fn pooled(features: &[Vec<f64>], labels: &[u8]) -> Result<Pooled> {
    if features.len() != labels.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            actual: features.len(),
        });
    }
    let d = features.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::Data("empty feature vectors".into()));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            actual: bad.len(),
        });
    }
    let mut sums = [DVector::zeros(d), DVector::zeros(d)];
    let mut counts = [0usize; 2];
    for (f, &l) in features.iter().zip(labels) {
        if l > 1 {
            return Err(Error::Data(format!("labels must be 0 or 1, found {l}")));
        }
        sums[l as usize] += DVector::from_column_slice(f);
        counts[l as usize] += 1;
    }
    let means = [
        &sums[0] / counts[0].max(1) as f64,
        &sums[1] / counts[1].max(1) as f64,
    ];
    let n = features.len();
    let centered = DMatrix::from_fn(d, n, |i, k| features[k][i] - means[labels[k] as usize][i]);
    let cov = &centered * centered.transpose() / (n.saturating_sub(1).max(1)) as f64;
    Ok(Pooled {
        means,
        counts,
        centered,
        cov,
    })
}

fn analytic_gamma(p: &Pooled) -> f64 {
    if p.counts.iter().any(|&c| c < 2) {
        return 1.0;
    }
    let d = p.cov.nrows();
    let n = p.centered.ncols();
    let nf = n as f64;
    let nu = p.cov.trace() / d as f64;
    let z = &p.centered;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..d {
        for j in 0..d {
            let zi = z.row(i);
            let zj = z.row(j);
            let mean = zi.dot(&zj) / nf;
            let ss: f64 = zi.iter().zip(zj.iter()).map(|(a, b)| (a * b - mean).powi(2)).sum();
            num += ss;
            let target = if i == j { nu } else { 0.0 };
            den += (p.cov[(i, j)] - target).powi(2);
        }
    }
    num *= nf / (nf - 1.0).powi(3);
    if !(den > 0.0) {
        return 1.0;
    }
    (num / den).clamp(0.0, 1.0)
}

/// Analytic shrinkage intensity; 1 when a class has fewer than two samples.
pub fn estimate_shrinkage(features: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    Ok(analytic_gamma(&pooled(features, labels)?))
}

/// Regularized covariance `(1 - gamma) S + gamma nu I`.
fn regularized(cov: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let d = cov.nrows();
    let nu = cov.trace() / d as f64;
    cov * (1.0 - gamma) + DMatrix::identity(d, d) * (gamma * nu)
}

pub fn fit(features: &[Vec<f64>], labels: &[u8], shrinkage: Shrinkage) -> Result<RldaModel> {
    let p = pooled(features, labels)?;
    if p.counts.iter().any(|&c| c == 0) {
        return Err(Error::Data("both classes must be present to train".into()));
    }
    let gamma = match shrinkage {
        Shrinkage::Auto => analytic_gamma(&p),
        Shrinkage::Fixed(g) if (0.0..=1.0).contains(&g) => g,
        Shrinkage::Fixed(g) => {
            return Err(Error::Config(format!("shrinkage must lie in [0, 1], got {g}")));
        }
    };
    let sigma = regularized(&p.cov, gamma);
    let diff = &p.means[1] - &p.means[0];
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("regularized covariance is singular (gamma = {gamma})")))?;
    let w = chol.solve(&diff);
    let b = -w.dot(&(&p.means[0] + &p.means[1])) / 2.0;
    if !(b.is_finite() && w.iter().all(|v| v.is_finite())) {
        return Err(Error::Numerical("non-finite discriminant".into()));
    }
    Ok(RldaModel {
        w: w.iter().copied().collect(),
        b,
        gamma,
        class_means: [
            p.means[0].iter().copied().collect(),
            p.means[1].iter().copied().collect(),
        ],
    })
}

impl RldaModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    /// Class 1 iff the score is strictly positive.
    pub fn predict_one(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let score = self.score(x);
        Ok(Prediction {
            label: u8::from(score > 0.0),
            score,
        })
    }

    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        features.iter().map(|x| self.predict_one(x)).collect()
    }
}

pub fn predict(model: &RldaModel, features: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    model.predict(features)
}
