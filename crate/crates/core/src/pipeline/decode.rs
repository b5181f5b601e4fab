use std::collections::HashSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::intervals::WindowSpec;
use crate::csp::{self, average_normalized, trial_covariance, CSP_FILTERS_PER_END, FEATURE_EPS};
use crate::dataset::TrialSet;
use crate::dsp::{build_filter_bank, design_bandpass, BandSpec, BandSubset, Direction, FilterBankSpec, FILTER_ORDER};
use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;
use crate::rlda::{self, Shrinkage};
use crate::stats::{permutation_pvalue, PermutationConfig, PermutationResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub window: WindowSpec,
    /// Filters kept from each end of the eigenvalue spectrum.
    pub m: usize,
    pub filter_order: usize,
    pub direction: Direction,
    pub shrinkage: Shrinkage,
}

impl DecodeConfig {
    pub fn new(window: WindowSpec) -> Self {
        DecodeConfig {
            window,
            m: CSP_FILTERS_PER_END,
            filter_order: FILTER_ORDER,
            direction: Direction::Causal,
            shrinkage: Shrinkage::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPrediction {
    pub trial_id: u32,
    pub label: u8,
    pub predicted: u8,
    pub score: f64,
    pub fold: usize,
    pub rejected: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Shrinkage intensity of the fold's classifier.
    pub gamma: f64,
    /// `None` when the test fold holds a single class.
    pub accuracy: Option<f64>,
    #[serde(skip)]
    pub train_ids: Vec<u32>,
    #[serde(skip)]
    pub test_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub band: BandSpec,
    /// Balanced accuracy of the pooled out-of-fold predictions.
    pub accuracy: f64,
    pub mean_fold_accuracy: f64,
    pub fold_accuracies: Vec<Option<f64>>,
    pub predictions: Vec<TrialPrediction>,
    pub folds: Vec<FoldRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbcspResult {
    pub subset: BandSubset,
    pub interval: WindowSpec,
    pub bands: Vec<BandSpec>,
    pub n_features: usize,
    pub accuracy: f64,
    pub mean_fold_accuracy: f64,
    pub fold_accuracies: Vec<Option<f64>>,
    pub p_value: Option<f64>,
    pub permutation: Option<PermutationResult>,
    pub predictions: Vec<TrialPrediction>,
    pub folds: Vec<FoldRecord>,
}

impl FbcspResult {
    /// Attaches the permutation p-value of the pooled predictions.
    pub fn with_significance(mut self, cfg: &PermutationConfig) -> Result<Self> {
        let (pred, labels) = split(&self.predictions);
        let r = permutation_pvalue(&pred, &labels, cfg)?;
        self.p_value = Some(r.p_value);
        self.permutation = Some(r);
        Ok(self)
    }
}

fn split(predictions: &[TrialPrediction]) -> (Vec<u8>, Vec<u8>) {
    predictions.iter().map(|p| (p.predicted, p.label)).unzip()
}

/// Per-trial covariances of one band-passed frequency band, cut to the
/// decoding window. Filtering runs over the whole trial first so the
/// window does not see the filter's start-up.
#[derive(Debug, Clone)]
pub struct BandCovariances {
    pub band: BandSpec,
    pub covs: Vec<DMatrix<f64>>,
}

pub fn band_covariances(trials: &TrialSet, band: BandSpec, cfg: &DecodeConfig) -> Result<BandCovariances> {
    let filter = design_bandpass(band, cfg.filter_order, trials.fs_hz())?;
    let (a, b) = trials.sample_range(&cfg.window.window)?;
    let n_ch = trials.n_channels();
    let covs = (0..trials.n_trials())
        .into_par_iter()
        .map(|t| {
            let mut block = Vec::with_capacity(n_ch * (b - a));
            for c in 0..n_ch {
                let y = filter.filter_with(trials.channel(t, c), cfg.direction);
                block.extend_from_slice(&y[a..b]);
            }
            trial_covariance(&block, n_ch, b - a)
        })
        .collect();
    Ok(BandCovariances { band, covs })
}

struct CvOutcome {
    predictions: Vec<TrialPrediction>,
    folds: Vec<FoldRecord>,
    fold_accuracies: Vec<Option<f64>>,
    accuracy: f64,
    mean_fold_accuracy: f64,
}

fn run_fold(
    fold: usize,
    trials: &TrialSet,
    assignment: &[usize],
    bands: &[&BandCovariances],
    cfg: &DecodeConfig,
) -> Result<(FoldRecord, Vec<TrialPrediction>)> {
    let labels = trials.labels();
    let n = trials.n_trials();
    let train: Vec<usize> = (0..n)
        .filter(|&t| assignment[t] != fold && !trials.rejected()[t])
        .collect();
    let test: Vec<usize> = (0..n).filter(|&t| assignment[t] == fold).collect();
    for class in 0..2u8 {
        if !train.iter().any(|&t| labels[t] == class) {
            return Err(Error::ClassMissingInTraining { fold, class });
        }
    }
    let mut train_x = vec![Vec::new(); train.len()];
    let mut test_x = vec![Vec::new(); test.len()];
    for bc in bands {
        let class = |c: u8| average_normalized(train.iter().filter(|&&t| labels[t] == c).map(|&t| &bc.covs[t]), c);
        let model = csp::fit_csp(&class(0)?, &class(1)?)?.select(cfg.m)?;
        for (x, &t) in train_x.iter_mut().zip(&train) {
            x.extend(model.log_variance_from_cov(&bc.covs[t], FEATURE_EPS));
        }
        for (x, &t) in test_x.iter_mut().zip(&test) {
            x.extend(model.log_variance_from_cov(&bc.covs[t], FEATURE_EPS));
        }
    }
    let train_labels: Vec<u8> = train.iter().map(|&t| labels[t]).collect();
    let lda = rlda::fit(&train_x, &train_labels, cfg.shrinkage)?;
    let predictions: Vec<TrialPrediction> = lda
        .predict(&test_x)?
        .into_iter()
        .zip(&test)
        .map(|(p, &t)| TrialPrediction {
            trial_id: trials.trial_ids()[t],
            label: labels[t],
            predicted: p.label,
            score: p.score,
            fold,
            rejected: trials.rejected()[t],
        })
        .collect();
    let (pred, lab) = split(&predictions);
    let accuracy = if lab.contains(&0) && lab.contains(&1) {
        Some(balanced_accuracy(&pred, &lab)?)
    } else {
        None
    };
    let ids = |v: &[usize]| v.iter().map(|&t| trials.trial_ids()[t]).collect();
    let record = FoldRecord {
        fold,
        n_train: train.len(),
        n_test: test.len(),
        gamma: lda.gamma,
        accuracy,
        train_ids: ids(&train),
        test_ids: ids(&test),
    };
    Ok((record, predictions))
}

fn cross_validate(trials: &TrialSet, bands: &[&BandCovariances], plan: &FoldPlan, cfg: &DecodeConfig) -> Result<CvOutcome> {
    if bands.is_empty() {
        return Err(Error::Config("no frequency bands to decode".into()));
    }
    if let Some(bc) = bands.iter().find(|bc| bc.covs.len() != trials.n_trials()) {
        return Err(Error::Dimension {
            expected: trials.n_trials(),
            actual: bc.covs.len(),
        });
    }
    let assignment = plan.assignment(trials)?;
    let outcomes: Vec<(FoldRecord, Vec<TrialPrediction>)> = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(f, trials, &assignment, bands, cfg))
        .collect::<Result<_>>()?;
    let mut folds = Vec::with_capacity(plan.k);
    let mut predictions = Vec::with_capacity(trials.n_trials());
    for (rec, preds) in outcomes {
        folds.push(rec);
        predictions.extend(preds);
    }
    predictions.sort_by_key(|p| p.trial_id);
    let (pred, lab) = split(&predictions);
    let accuracy = balanced_accuracy(&pred, &lab)?;
    let fold_accuracies: Vec<Option<f64>> = folds.iter().map(|f| f.accuracy).collect();
    let scored: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
    let mean_fold_accuracy = if scored.is_empty() {
        accuracy
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    Ok(CvOutcome {
        predictions,
        folds,
        fold_accuracies,
        accuracy,
        mean_fold_accuracy,
    })
}

/// Cross-validated CSP + rLDA on a single band from cached covariances.
pub fn decode_band(trials: &TrialSet, cov: &BandCovariances, plan: &FoldPlan, cfg: &DecodeConfig) -> Result<BandResult> {
    let cv = cross_validate(trials, &[cov], plan, cfg)?;
    Ok(BandResult {
        band: cov.band,
        accuracy: cv.accuracy,
        mean_fold_accuracy: cv.mean_fold_accuracy,
        fold_accuracies: cv.fold_accuracies,
        predictions: cv.predictions,
        folds: cv.folds,
    })
}

/// Cross-validated FBCSP over the cached bands that belong to `subset`.
pub fn decode_fbcsp(
    trials: &TrialSet,
    covs: &[BandCovariances],
    subset: BandSubset,
    plan: &FoldPlan,
    cfg: &DecodeConfig,
) -> Result<FbcspResult> {
    let used: Vec<&BandCovariances> = covs.iter().filter(|bc| subset.contains(&bc.band)).collect();
    if used.is_empty() {
        return Err(Error::Config(format!("band subset {} is empty", subset.tag())));
    }
    let cv = cross_validate(trials, &used, plan, cfg)?;
    Ok(FbcspResult {
        subset,
        interval: cfg.window.clone(),
        bands: used.iter().map(|bc| bc.band).collect(),
        n_features: 2 * cfg.m * used.len(),
        accuracy: cv.accuracy,
        mean_fold_accuracy: cv.mean_fold_accuracy,
        fold_accuracies: cv.fold_accuracies,
        p_value: None,
        permutation: None,
        predictions: cv.predictions,
        folds: cv.folds,
    })
}

pub fn run_band_csp(trials: &TrialSet, band: BandSpec, plan: &FoldPlan, cfg: &DecodeConfig) -> Result<BandResult> {
    decode_band(trials, &band_covariances(trials, band, cfg)?, plan, cfg)
}

/// Per-band accuracies over `bands`, in the given order.
pub fn run_band_sweep(trials: &TrialSet, bands: &[BandSpec], plan: &FoldPlan, cfg: &DecodeConfig) -> Result<Vec<BandResult>> {
    bands.iter().map(|&b| run_band_csp(trials, b, plan, cfg)).collect()
}

/// FBCSP on one subset of the default filter bank.
pub fn run_fbcsp(trials: &TrialSet, subset: BandSubset, plan: &FoldPlan, cfg: &DecodeConfig) -> Result<FbcspResult> {
    let bank = build_filter_bank(trials.fs_hz(), &FilterBankSpec::default())?;
    let covs = bank
        .subset(subset)
        .into_iter()
        .map(|b| band_covariances(trials, b, cfg))
        .collect::<Result<Vec<_>>>()?;
    decode_fbcsp(trials, &covs, subset, plan, cfg)
}

/// Checks a finished cross-validation against the fold plan. Returns one
/// message per violation; empty means clean.
pub fn audit_leakage(
    trials: &TrialSet,
    plan: &FoldPlan,
    folds: &[FoldRecord],
    predictions: &[TrialPrediction],
) -> Vec<String> {
    let mut v = Vec::new();
    let rejected: HashSet<u32> = trials
        .trial_ids()
        .iter()
        .zip(trials.rejected())
        .filter(|(_, &r)| r)
        .map(|(&id, _)| id)
        .collect();
    if folds.len() != plan.k {
        v.push(format!("{} fold records for a {}-fold plan", folds.len(), plan.k));
    }
    for rec in folds {
        let test: HashSet<u32> = rec.test_ids.iter().copied().collect();
        for id in &rec.train_ids {
            if test.contains(id) {
                v.push(format!("fold {}: trial {id} in both train and test", rec.fold));
            }
            if rejected.contains(id) {
                v.push(format!("fold {}: rejected trial {id} used for training", rec.fold));
            }
        }
        if plan.test.get(rec.fold).map(|t| t.as_slice()) != Some(&rec.test_ids[..]) {
            v.push(format!("fold {}: test set differs from the plan", rec.fold));
        }
    }
    let mut seen = std::collections::HashMap::new();
    for p in predictions {
        *seen.entry(p.trial_id).or_insert(0) += 1;
        if plan.fold_of(p.trial_id) != Some(p.fold) {
            v.push(format!("trial {} predicted outside its test fold", p.trial_id));
        }
    }
    for &id in trials.trial_ids() {
        match seen.get(&id) {
            Some(1) => {}
            Some(c) => v.push(format!("trial {id} predicted {c} times")),
            None => v.push(format!("trial {id} never predicted")),
        }
    }
    v
}
