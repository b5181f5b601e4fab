use serde::{Deserialize, Serialize};

use crate::cleaning::{
    self, CleaningReport, RejectionScope, NOISY_CHANNEL_K, REJECT_PRE_MS, REJECT_THRESHOLD_UV,
};
use crate::dataset::{Interval, TrialSet};
use crate::dsp::{self, design_highpass, FILTER_ORDER, HIGHPASS_CUTOFF_HZ, TARGET_FS_HZ};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    pub threshold_uv: f64,
    pub pre_ms: f64,
    pub scope: RejectionScope,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        RejectionConfig {
            threshold_uv: REJECT_THRESHOLD_UV,
            pre_ms: REJECT_PRE_MS,
            scope: RejectionScope::AnyChannel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Decimate to this rate when the data is an integer multiple of it.
    pub target_fs_hz: Option<f64>,
    pub highpass_hz: Option<f64>,
    pub highpass_order: usize,
    /// Robust z threshold for automatic noisy-channel removal.
    pub noisy_channel_k: Option<f64>,
    /// Channels removed by name before automatic detection.
    pub exclude_channels: Vec<String>,
    pub rejection: Option<RejectionConfig>,
    pub common_average: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            target_fs_hz: Some(TARGET_FS_HZ),
            highpass_hz: Some(HIGHPASS_CUTOFF_HZ),
            highpass_order: FILTER_ORDER,
            noisy_channel_k: Some(NOISY_CHANNEL_K),
            exclude_channels: Vec::new(),
            rejection: Some(RejectionConfig::default()),
            common_average: true,
        }
    }
}

fn decimation_factor(fs: f64, target: f64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::Config(format!("target rate must be positive, got {target}")));
    }
    if fs <= target {
        return Ok(1);
    }
    let ratio = fs / target;
    let factor = ratio.round();
    if (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "cannot decimate {fs} Hz to {target} Hz by an integer factor"
        )));
    }
    Ok(factor as usize)
}

/// Downsampling, causal high-pass, channel cleaning, trial rejection over
/// the decoding window plus pre-window, then common-average reference.
/// Trials stay uncut; rejected ones are only flagged.
pub fn preprocess(trials: &TrialSet, cfg: &PreprocessConfig, window: Interval) -> Result<(TrialSet, CleaningReport)> {
    let mut ts = match cfg.target_fs_hz {
        Some(target) => dsp::downsample_trials(trials, decimation_factor(trials.fs_hz(), target)?)?,
        None => trials.clone(),
    };
    if let Some(fc) = cfg.highpass_hz {
        let hp = design_highpass(fc, cfg.highpass_order, ts.fs_hz())?;
        // steady-state start removes the step response to any DC offset
        ts = ts.map_channels(ts.fs_hz(), ts.interval(), |x| hp.filter_steady(x))?;
    }
    let mut report = CleaningReport::default();
    if !cfg.exclude_channels.is_empty() {
        ts = cleaning::remove_channels(&ts, &cfg.exclude_channels)?;
    }
    if let Some(k) = cfg.noisy_channel_k {
        let noisy = cleaning::detect_noisy_channels(&ts, k)?;
        let names: Vec<String> = noisy.iter().map(|c| c.name.clone()).collect();
        ts = cleaning::remove_channels(&ts, &names)?;
        report.removed_channels = noisy;
    }
    if let Some(r) = cfg.rejection {
        let (flagged, rejected) = cleaning::mark_rejected_trials(&ts, r.threshold_uv, r.pre_ms, window, r.scope)?;
        ts = flagged;
        report.rejected_trials = rejected;
    }
    if cfg.common_average {
        ts = cleaning::common_average_reference(&ts)?;
    }
    Ok((ts, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors() {
        assert_eq!(decimation_factor(5000.0, 500.0).unwrap(), 10);
        assert_eq!(decimation_factor(500.0, 500.0).unwrap(), 1);
        assert_eq!(decimation_factor(250.0, 500.0).unwrap(), 1);
        assert!(decimation_factor(1200.0, 500.0).is_err());
    }

    #[test]
    fn flags_and_removes() {
        let n_ch = 6;
        let n_s = 300;
        let iv = Interval::new(-1000.0, 2000.0).unwrap();
        let mut data = Vec::new();
        for t in 0..4 {
            for c in 0..n_ch {
                for j in 0..n_s {
                    let scale = if c == 5 { 100.0 } else { 1.0 + 0.1 * c as f64 };
                    let mut v = scale * ((j * (c + 3) + t) as f64 * 0.7).sin();
                    if t == 2 && j == 200 {
                        v += 1000.0;
                    }
                    data.push(v);
                }
            }
        }
        let names = (0..n_ch).map(|c| format!("C{c}")).collect();
        let ts = TrialSet::new(100.0, names, iv, data, vec![0, 1, 0, 1]).unwrap();
        let cfg = PreprocessConfig {
            exclude_channels: vec!["C0".into()],
            ..PreprocessConfig::default()
        };
        let (out, report) = preprocess(&ts, &cfg, Interval::new(0.0, 2000.0).unwrap()).unwrap();
        assert_eq!(out.n_channels(), 4);
        assert_eq!(report.removed_channels[0].name, "C5");
        assert_eq!(out.rejected(), &[false, false, true, false]);
        assert_eq!(report.rejected_trials[0].trial_id, 2);
        let block = out.trial(0);
        for j in 0..n_s {
            let s: f64 = (0..4).map(|c| block[c * n_s + j]).sum();
            assert!(s.abs() < 1e-9);
        }
    }
}
