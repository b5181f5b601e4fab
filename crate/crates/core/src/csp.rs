//! Common spatial patterns.
//!
//! Class covariances are averages of trace-normalized trial covariances.
//! Filters solve the symmetric-definite pencil `C1 w = lambda (C1 + C2) w`:
//! the composite is whitened through its eigendecomposition, the whitened
//! class-1 covariance is diagonalized, and the eigenvectors are mapped back.
//! The result satisfies `W' (C1 + C2) W = I` and `W' C1 W = diag(lambda)`
//! with `lambda` ascending in `[0, 1]`.
//!
//! Composite directions with eigenvalue at or below `1e-9 * mean(diag)` are
//! numerically null (common-average referencing always leaves one) and are
//! dropped, so `W` has one column per retained direction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::TrialSet;
use crate::error::{Error, Result};

/// Filters kept at each end of the eigenvalue spectrum.
pub const CSP_FILTERS_PER_END: usize = 3;
/// Relative floor below which composite directions count as null.
pub const COMPOSITE_EPS: f64 = 1e-9;
/// Variance floor inside the log of log-variance features.
pub const FEATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub matrix: DMatrix<f64>,
    pub n_trials: usize,
    pub class_id: u8,
}

/// Sample covariance (`n - 1` denominator) of a channel-major block.
pub fn trial_covariance(block: &[f64], n_channels: usize, n_samples: usize) -> DMatrix<f64> {
    let mut x = DMatrix::from_row_slice(n_channels, n_samples, block);
    for mut row in x.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    let denom = n_samples.saturating_sub(1).max(1) as f64;
    (&x * x.transpose()) / denom
}

/// Mean of trace-normalized covariances, renormalized to unit trace.
pub fn average_normalized<'a, I>(covs: I, class_id: u8) -> Result<CovEstimate>
where
    I: IntoIterator<Item = &'a DMatrix<f64>>,
{
    let mut sum: Option<DMatrix<f64>> = None;
    let mut n = 0;
    for c in covs {
        let tr = c.trace();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::Data(format!(
                "class {class_id}: trial with zero or non-finite variance"
            )));
        }
        match sum.as_mut() {
            Some(s) => *s += c / tr,
            None => sum = Some(c / tr),
        }
        n += 1;
    }
    let Some(mut m) = sum else {
        return Err(Error::Data(format!("no trials of class {class_id}")));
    };
    let tr = m.trace();
    m /= tr;
    m = (&m + m.transpose()) * 0.5;
    Ok(CovEstimate {
        matrix: m,
        n_trials: n,
        class_id,
    })
}

/// Class covariance over the non-rejected trials labelled `class_id`.
pub fn class_covariance(trials: &TrialSet, class_id: u8) -> Result<CovEstimate> {
    let covs: Vec<DMatrix<f64>> = (0..trials.n_trials())
        .filter(|&t| trials.labels()[t] == class_id && !trials.rejected()[t])
        .map(|t| trial_covariance(trials.trial(t), trials.n_channels(), trials.n_samples()))
        .collect();
    average_normalized(&covs, class_id)
}

/// Spatial filters (columns of `filters`), their generalized eigenvalues in
/// ascending order, the activation patterns and the retained subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CspModelRepr", try_from = "CspModelRepr")]
pub struct CspModel {
    pub filters: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub patterns: DMatrix<f64>,
    pub selected: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CspModelRepr {
    n_channels: usize,
    eigenvalues: Vec<f64>,
    selected: Vec<usize>,
    /// One entry per filter, each of length `n_channels`.
    filters: Vec<Vec<f64>>,
    patterns: Vec<Vec<f64>>,
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn from_columns(n: usize, cols: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Data("filter column length differs from n_channels".into()));
    }
    Ok(DMatrix::from_iterator(n, cols.len(), cols.iter().flatten().copied()))
}

impl From<CspModel> for CspModelRepr {
    fn from(m: CspModel) -> Self {
        CspModelRepr {
            n_channels: m.filters.nrows(),
            filters: columns(&m.filters),
            patterns: columns(&m.patterns),
            eigenvalues: m.eigenvalues,
            selected: m.selected,
        }
    }
}

impl TryFrom<CspModelRepr> for CspModel {
    type Error = Error;

    fn try_from(r: CspModelRepr) -> Result<Self> {
        let filters = from_columns(r.n_channels, &r.filters)?;
        let patterns = from_columns(r.n_channels, &r.patterns)?;
        if r.eigenvalues.len() != filters.ncols() || patterns.ncols() != filters.ncols() {
            return Err(Error::Data("inconsistent CSP model".into()));
        }
        Ok(CspModel {
            filters,
            patterns,
            eigenvalues: r.eigenvalues,
            selected: r.selected,
        })
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Data(format!("{what} is not square")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::Data(format!("{what} is not symmetric (max asymmetry {asym:e})")));
    }
    Ok(())
}

pub fn fit_csp(c1: &CovEstimate, c2: &CovEstimate) -> Result<CspModel> {
    fit_csp_matrices(&c1.matrix, &c2.matrix)
}

/// Solves `C1 w = lambda (C1 + C2) w` for arbitrary symmetric PSD inputs.
pub fn fit_csp_matrices(c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> Result<CspModel> {
    check_symmetric(c1, "first covariance")?;
    check_symmetric(c2, "second covariance")?;
    if c1.shape() != c2.shape() {
        return Err(Error::Dimension {
            expected: c1.nrows(),
            actual: c2.nrows(),
        });
    }
    let n = c1.nrows();
    let composite = c1 + c2;
    let composite_sym = (&composite + composite.transpose()) * 0.5;
    let floor = COMPOSITE_EPS * composite_sym.trace() / n as f64;
    if !(floor > 0.0) {
        return Err(Error::Numerical("composite covariance is zero".into()));
    }

    let eig = SymmetricEigen::new(composite_sym);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > floor).collect();
    if keep.is_empty() {
        return Err(Error::Numerical("composite covariance has no usable rank".into()));
    }
    let r = keep.len();
    // whitening: P = D^-1/2 U', r x n
    let mut whiten = DMatrix::zeros(r, n);
    for (row, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt().recip();
        for j in 0..n {
            whiten[(row, j)] = eig.eigenvectors[(j, i)] * s;
        }
    }
    let m1 = &whiten * c1 * whiten.transpose();
    let m1 = (&m1 + m1.transpose()) * 0.5;
    let inner = SymmetricEigen::new(m1);

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| inner.eigenvalues[a].total_cmp(&inner.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| inner.eigenvalues[i]).collect();
    let v = DMatrix::from_fn(r, r, |i, j| inner.eigenvectors[(i, order[j])]);

    let mut filters = whiten.transpose() * v;
    let mut patterns = &composite * &filters;
    for j in 0..r {
        let col = patterns.column(j);
        let peak = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if peak < 0.0 {
            filters.column_mut(j).neg_mut();
            patterns.column_mut(j).neg_mut();
        }
    }
    Ok(CspModel {
        filters,
        eigenvalues,
        patterns,
        selected: Vec::new(),
    })
}

impl CspModel {
    pub fn n_channels(&self) -> usize {
        self.filters.nrows()
    }

    pub fn n_filters(&self) -> usize {
        self.filters.ncols()
    }

    /// Keeps the `m` lowest- and `m` highest-eigenvalue filters.
    pub fn select(mut self, m: usize) -> Result<CspModel> {
        let r = self.n_filters();
        if m == 0 || 2 * m > r {
            return Err(Error::Config(format!(
                "cannot select {m} filters per end from {r} available"
            )));
        }
        self.selected = (0..m).chain(r - m..r).collect();
        Ok(self)
    }

    /// Retained filters as columns (`n_channels x 2m`).
    pub fn selected_filters(&self) -> DMatrix<f64> {
        self.filters.select_columns(&self.selected)
    }

    pub fn selected_patterns(&self) -> DMatrix<f64> {
        self.patterns.select_columns(&self.selected)
    }

    /// Log-variance features computed from a trial covariance instead of
    /// the projected signal: `var(w' X) = w' S w`.
    pub fn log_variance_from_cov(&self, cov: &DMatrix<f64>, eps: f64) -> Vec<f64> {
        self.selected
            .iter()
            .map(|&j| {
                let w = self.filters.column(j);
                let v = (w.transpose() * cov * w)[(0, 0)];
                (v.max(0.0) + eps).ln()
            })
            .collect()
    }
}

pub fn select_filters(model: CspModel, m: usize) -> Result<CspModel> {
    model.select(m)
}

/// Projects every trial onto the selected filters: `W_sel' X`, one
/// `2m x n_samples` matrix per trial.
pub fn apply_csp(model: &CspModel, trials: &TrialSet) -> Result<Vec<DMatrix<f64>>> {
    if trials.n_channels() != model.n_channels() {
        return Err(Error::Dimension {
            expected: model.n_channels(),
            actual: trials.n_channels(),
        });
    }
    let w = model.selected_filters().transpose();
    Ok((0..trials.n_trials())
        .map(|t| {
            let x = DMatrix::from_row_slice(trials.n_channels(), trials.n_samples(), trials.trial(t));
            &w * x
        })
        .collect())
}

/// `ln(var + eps)` of each virtual channel (row), sample variance.
pub fn log_variance(projected: &[DMatrix<f64>], eps: f64) -> Vec<Vec<f64>> {
    projected
        .iter()
        .map(|p| {
            let n = p.ncols();
            p.row_iter()
                .map(|row| {
                    let v = if n < 2 {
                        0.0
                    } else {
                        let mean = row.mean();
                        row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
                    };
                    (v + eps).ln()
                })
                .collect()
        })
        .collect()
}

/// Cosines of the principal angles between the column spaces of `a` and `b`.
pub fn principal_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    (qa.transpose() * qb).singular_values()
}
