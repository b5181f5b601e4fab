use super::butterworth::design_lowpass;
use super::filter::IirFilter;
use crate::dataset::{Interval, Recording, TrialSet};
use crate::error::{Error, Result};

const ANTI_ALIAS_ORDER: usize = 8;
const ANTI_ALIAS_FRACTION: f64 = 0.4;

/// 8th-order Butterworth low-pass at 0.4 x the decimated sampling rate.
pub fn anti_alias_filter(fs_hz: f64, factor: usize) -> Result<IirFilter> {
    design_lowpass(ANTI_ALIAS_FRACTION * fs_hz / factor as f64, ANTI_ALIAS_ORDER, fs_hz)
}

fn decimate(filter: Option<&IirFilter>, x: &[f64], factor: usize) -> Vec<f64> {
    let n_out = x.len() / factor;
    match filter {
        None => x.to_vec(),
        Some(f) => {
            let y = f.filter_steady(x);
            (0..n_out).map(|i| y[i * factor]).collect()
        }
    }
}

fn check_factor(factor: usize) -> Result<()> {
    if factor < 1 {
        return Err(Error::Config("decimation factor must be at least 1".into()));
    }
    Ok(())
}

/// Low-pass then keep every `factor`-th sample. The anti-alias state starts
/// at steady state for the first sample so DC passes without a transient.
pub fn downsample(recording: &Recording, factor: usize) -> Result<Recording> {
    check_factor(factor)?;
    let filter = match factor {
        1 => None,
        _ => Some(anti_alias_filter(recording.fs_hz(), factor)?),
    };
    let samples = recording
        .samples()
        .iter()
        .map(|ch| decimate(filter.as_ref(), ch, factor))
        .collect();
    Recording::new(
        recording.fs_hz() / factor as f64,
        recording.channel_names().to_vec(),
        samples,
    )
}

/// Trial-wise variant of [`downsample`]. The interval end is adjusted to
/// the retained sample count.
pub fn downsample_trials(trials: &TrialSet, factor: usize) -> Result<TrialSet> {
    check_factor(factor)?;
    if factor == 1 {
        return Ok(trials.clone());
    }
    let filter = anti_alias_filter(trials.fs_hz(), factor)?;
    let fs_out = trials.fs_hz() / factor as f64;
    let n_out = trials.n_samples() / factor;
    let iv = trials.interval();
    let interval = Interval {
        start_ms: iv.start_ms,
        end_ms: iv.start_ms + n_out as f64 / fs_out * 1000.0,
    };
    trials.map_channels(fs_out, interval, |x| decimate(Some(&filter), x, factor))
}
