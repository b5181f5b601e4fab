//! Randomization test for decoding accuracies.
//!
//! Each resample draws a prediction for every trial independently and
//! uniformly from the multiset of the original predictions (with
//! replacement), scores it by balanced accuracy against the true labels,
//! and counts resamples at least as accurate as the observed predictions.
//! Accuracy comparisons are exact integer comparisons.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ClassTally;
use crate::seed;

/// Default number of resamples.
pub const PERMUTATIONS: usize = 100_000;
/// Largest input accepted by [`exact_pvalue_small`].
pub const EXACT_MAX_TRIALS: usize = 12;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// iid draws from the empirical prediction distribution
    #[default]
    WithReplacement,
    /// random permutation of the original predictions
    WithoutReplacement,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueEstimator {
    /// `(r + 1) / (n + 1)`
    #[default]
    AddOne,
    /// `r / n`
    RawFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub n_resamples: usize,
    pub seed: u64,
    pub resampling: Resampling,
    pub estimator: PValueEstimator,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            n_resamples: PERMUTATIONS,
            seed: 0,
            resampling: Resampling::default(),
            estimator: PValueEstimator::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub p_value: f64,
    pub n_resamples: usize,
    pub n_at_least_as_good: usize,
    pub observed_accuracy: f64,
    pub seed: u64,
}

fn count_chunk(
    chunk: usize,
    size: usize,
    predictions: &[u8],
    labels: &[u8],
    tally: &ClassTally,
    threshold: u64,
    cfg: &PermutationConfig,
) -> usize {
    let mut rng = seed::rng(cfg.seed, seed::stream::PERMUTATION, chunk as u64);
    let n = predictions.len();
    let ones = predictions.iter().filter(|&&p| p == 1).count();
    let mut shuffled = predictions.to_vec();
    let mut hits = 0;
    for _ in 0..size {
        let mut correct = [0u64; 2];
        match cfg.resampling {
            Resampling::WithReplacement => {
                for &l in labels {
                    let p = u8::from(rng.random_range(0..n) < ones);
                    correct[l as usize] += u64::from(p == l);
                }
            }
            Resampling::WithoutReplacement => {
                shuffled.shuffle(&mut rng);
                for (&p, &l) in shuffled.iter().zip(labels) {
                    correct[l as usize] += u64::from(p == l);
                }
            }
        }
        if tally.scaled_key(correct) >= threshold {
            hits += 1;
        }
    }
    hits
}

/// Monte-Carlo p-value of the observed balanced accuracy. Work is split into
/// fixed-size chunks with per-chunk seeds, so the result does not depend on
/// the thread count.
pub fn permutation_pvalue(predictions: &[u8], labels: &[u8], cfg: &PermutationConfig) -> Result<PermutationResult> {
    if cfg.n_resamples < 1 {
        return Err(Error::Config("need at least one resample".into()));
    }
    let tally = ClassTally::new(predictions, labels)?;
    let threshold = tally.scaled_key(tally.correct);
    let n_chunks = cfg.n_resamples.div_ceil(CHUNK);
    let hits: usize = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let size = CHUNK.min(cfg.n_resamples - c * CHUNK);
            count_chunk(c, size, predictions, labels, &tally, threshold, cfg)
        })
        .sum();
    let p_value = match cfg.estimator {
        PValueEstimator::AddOne => (hits + 1) as f64 / (cfg.n_resamples + 1) as f64,
        PValueEstimator::RawFraction => hits as f64 / cfg.n_resamples as f64,
    };
    Ok(PermutationResult {
        p_value,
        n_resamples: cfg.n_resamples,
        n_at_least_as_good: hits,
        observed_accuracy: tally.balanced_accuracy(),
        seed: cfg.seed,
    })
}

/// Exact probability that an iid resample from the empirical prediction
/// distribution scores at least the observed balanced accuracy, by
/// enumerating all `2^n` prediction vectors.
pub fn exact_pvalue_small(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    let tally = ClassTally::new(predictions, labels)?;
    let n = predictions.len();
    if n > EXACT_MAX_TRIALS {
        return Err(Error::Config(format!(
            "exact enumeration supports at most {EXACT_MAX_TRIALS} trials, got {n}"
        )));
    }
    let q = predictions.iter().filter(|&&p| p == 1).count() as f64 / n as f64;
    let threshold = tally.scaled_key(tally.correct);
    let mut mass = 0.0;
    for mask in 0u32..(1 << n) {
        let mut correct = [0u64; 2];
        let mut weight = 1.0;
        for (i, &l) in labels.iter().enumerate() {
            let p = ((mask >> i) & 1) as u8;
            weight *= if p == 1 { q } else { 1.0 - q };
            correct[l as usize] += u64::from(p == l);
        }
        if tally.scaled_key(correct) >= threshold {
            mass += weight;
        }
    }
    Ok(mass)
}

/// `"**"` below 0.01, `"*"` below 0.05, empty otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
