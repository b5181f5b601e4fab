//! Noisy-channel detection, amplitude-based trial rejection and
//! common-average re-referencing.

use serde::{Deserialize, Serialize};

use crate::dataset::{Interval, TrialSet};
use crate::error::{Error, Result};

/// Default robust z-score threshold for noisy channels.
pub const NOISY_CHANNEL_K: f64 = 5.0;
/// Default peak-to-peak rejection threshold (microvolts).
pub const REJECT_THRESHOLD_UV: f64 = 600.0;
/// Default context inspected before the decoding interval (ms).
pub const REJECT_PRE_MS: f64 = 500.0;

const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedTrial {
    pub trial_id: u32,
    pub peak_to_peak_uv: f64,
}

/// What was removed and why. Serialized next to decoding reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub removed_channels: Vec<ChannelScore>,
    pub rejected_trials: Vec<RejectedTrial>,
}

/// How the peak-to-peak amplitude of a trial is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionScope {
    /// Largest max-min over the individual channels.
    #[default]
    AnyChannel,
    /// Max over all channels minus min over all channels.
    Global,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Robust z-score of every channel's log-variance against the median and
/// MAD across channels. `None` when the MAD vanishes.
pub fn channel_scores(trials: &TrialSet) -> Result<Option<Vec<f64>>> {
    if trials.n_channels() < 2 {
        return Err(Error::Data("noisy-channel detection needs at least two channels".into()));
    }
    let n_t = trials.n_trials().max(1) as f64;
    let log_var: Vec<f64> = (0..trials.n_channels())
        .map(|c| {
            let v = (0..trials.n_trials())
                .map(|t| variance(trials.channel(t, c)))
                .sum::<f64>()
                / n_t;
            v.max(f64::MIN_POSITIVE).ln()
        })
        .collect();
    let med = median(&mut log_var.clone());
    let mut dev: Vec<f64> = log_var.iter().map(|v| (v - med).abs()).collect();
    let mad = MAD_TO_SIGMA * median(&mut dev);
    if !(mad > 1e-12 * med.abs().max(1.0)) {
        return Ok(None);
    }
    Ok(Some(log_var.iter().map(|v| (v - med) / mad).collect()))
}

/// Names of channels whose robust log-variance z-score exceeds `k` in
/// absolute value, in montage order.
pub fn detect_noisy_channels(trials: &TrialSet, k: f64) -> Result<Vec<ChannelScore>> {
    let Some(scores) = channel_scores(trials)? else {
        return Ok(Vec::new());
    };
    Ok(trials
        .channel_names()
        .iter()
        .zip(scores)
        .filter(|(_, z)| z.abs() > k)
        .map(|(name, score)| ChannelScore {
            name: name.clone(),
            score,
        })
        .collect())
}

pub fn remove_channels(trials: &TrialSet, names: &[String]) -> Result<TrialSet> {
    for n in names {
        if !trials.channel_names().contains(n) {
            return Err(Error::Data(format!("unknown channel {n:?}")));
        }
    }
    let keep: Vec<usize> = trials
        .channel_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| !names.contains(n))
        .map(|(i, _)| i)
        .collect();
    if keep.len() == trials.n_channels() {
        return Ok(trials.clone());
    }
    trials.select_channels(&keep)
}

/// Peak-to-peak amplitude of every trial inside `window`.
pub fn peak_to_peak(trials: &TrialSet, window: &Interval, scope: RejectionScope) -> Result<Vec<f64>> {
    let (a, b) = trials.sample_range(window)?;
    let range = |x: &[f64]| {
        x.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    };
    Ok((0..trials.n_trials())
        .map(|t| {
            let per_channel = (0..trials.n_channels()).map(|c| range(&trials.channel(t, c)[a..b]));
            match scope {
                RejectionScope::AnyChannel => per_channel.map(|(lo, hi)| hi - lo).fold(0.0, f64::max),
                RejectionScope::Global => {
                    let (lo, hi) = per_channel
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (lo, hi)| (l.min(lo), h.max(hi)));
                    (hi - lo).max(0.0)
                }
            }
        })
        .collect())
}

/// Flags every trial whose peak-to-peak amplitude over
/// `[decoding.start - pre_ms, decoding.end)` strictly exceeds
/// `threshold_uv`. Existing flags are kept.
pub fn mark_rejected_trials(
    trials: &TrialSet,
    threshold_uv: f64,
    pre_ms: f64,
    decoding: Interval,
    scope: RejectionScope,
) -> Result<(TrialSet, Vec<RejectedTrial>)> {
    if !(threshold_uv >= 0.0) {
        return Err(Error::Config(format!("rejection threshold must be non-negative, got {threshold_uv}")));
    }
    if !(pre_ms >= 0.0) {
        return Err(Error::Config(format!("pre-window must be non-negative, got {pre_ms}")));
    }
    let window = Interval {
        start_ms: decoding.start_ms - pre_ms,
        end_ms: decoding.end_ms,
    };
    if !trials.interval().contains(&window) {
        return Err(Error::Data(format!(
            "inspection window {window} is not covered by the trials ({}); \
             epoch with more context or set the pre-window to 0",
            trials.interval()
        )));
    }
    let ptp = peak_to_peak(trials, &window, scope)?;
    let mut flags = trials.rejected().to_vec();
    let mut report = Vec::new();
    for (t, &p) in ptp.iter().enumerate() {
        if p > threshold_uv {
            flags[t] = true;
            report.push(RejectedTrial {
                trial_id: trials.trial_ids()[t],
                peak_to_peak_uv: p,
            });
        }
    }
    Ok((trials.clone().with_rejected(flags)?, report))
}

/// Subtracts the instantaneous across-channel mean from every channel.
pub fn common_average_reference(trials: &TrialSet) -> Result<TrialSet> {
    let n_ch = trials.n_channels();
    if n_ch < 2 {
        return Err(Error::Data("common-average reference needs at least two channels".into()));
    }
    let n_s = trials.n_samples();
    Ok(trials.map_trials(|block| {
        let mut mean = vec![0.0; n_s];
        for c in 0..n_ch {
            for (m, v) in mean.iter_mut().zip(&block[c * n_s..(c + 1) * n_s]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n_ch as f64);
        let mut out = block.to_vec();
        for c in 0..n_ch {
            for (o, m) in out[c * n_s..(c + 1) * n_s].iter_mut().zip(&mean) {
                *o -= m;
            }
        }
        out
    }))
}
