//! Trial containers, the on-disk dataset format and epoching.
//!
//! A dataset on disk is a pair of files in one directory:
//!
//! * `manifest.json`: UTF-8 JSON carrying shape, labels, sampling rate and
//!   the epoch interval (see [`DatasetManifest`]);
//! * `data.f32`: raw float32 little-endian samples in trial-major layout
//!   `[trial][channel][sample]`, in microvolts.
//!
//! In memory samples are `f64`. Values loaded from disk are exactly
//! representable as `f32`, so `load -> save` reproduces the data file byte
//! for byte.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.f32";
pub const UNITS: &str = "microvolt";
pub const DTYPE: &str = "float32, little-endian";
pub const LAYOUT: &str = "trial-major [trial][channel][sample]";

/// Time window relative to an event onset, in milliseconds. Serialized as a
/// two-element array `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub start_ms: f64,
    pub end_ms: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([start_ms, end_ms]: [f64; 2]) -> Self {
        Interval { start_ms, end_ms }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.start_ms, i.end_ms]
    }
}

impl Interval {
    pub fn new(start_ms: f64, end_ms: f64) -> Result<Self> {
        if !(start_ms.is_finite() && end_ms.is_finite()) || start_ms >= end_ms {
            return Err(Error::Config(format!(
                "interval start must precede end, got ({start_ms}, {end_ms}) ms"
            )));
        }
        Ok(Interval { start_ms, end_ms })
    }

    pub fn duration_ms(&self) -> f64 {
        self.end_ms - self.start_ms
    }

    /// Number of samples covering the interval at `fs_hz`.
    pub fn n_samples(&self, fs_hz: f64) -> usize {
        (self.duration_ms() / 1000.0 * fs_hz).round() as usize
    }

    pub fn contains(&self, other: &Interval) -> bool {
        other.start_ms >= self.start_ms - 1e-9 && other.end_ms <= self.end_ms + 1e-9
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} - {} ms", self.start_ms, self.end_ms)
    }
}

/// Continuous multichannel recording, channel-major, microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    fs_hz: f64,
    channel_names: Vec<String>,
    samples: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(fs_hz: f64, channel_names: Vec<String>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(fs_hz > 0.0 && fs_hz.is_finite()) {
            return Err(Error::Data(format!("sampling rate must be positive, got {fs_hz}")));
        }
        if channel_names.len() != samples.len() {
            return Err(Error::Dimension {
                expected: channel_names.len(),
                actual: samples.len(),
            });
        }
        check_unique(&channel_names)?;
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|c| c.len() != first.len()) {
                return Err(Error::Dimension {
                    expected: first.len(),
                    actual: bad.len(),
                });
            }
        }
        Ok(Recording {
            fs_hz,
            channel_names,
            samples,
        })
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::Data(format!("duplicate channel name {n:?}")));
        }
    }
    Ok(())
}

/// Epoched trials `[trial][channel][sample]` with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    fs_hz: f64,
    channel_names: Vec<String>,
    n_samples: usize,
    data: Vec<f64>,
    labels: Vec<u8>,
    trial_ids: Vec<u32>,
    interval: Interval,
    rejected: Vec<bool>,
}

impl TrialSet {
    /// Builds a trial set from a flat trial-major buffer. Trial ids are
    /// assigned `0..n_trials` and no trial is marked rejected.
    pub fn new(
        fs_hz: f64,
        channel_names: Vec<String>,
        interval: Interval,
        data: Vec<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = labels.len();
        let ids = (0..n as u32).collect();
        Self::from_parts(fs_hz, channel_names, interval, data, labels, ids, vec![false; n])
    }

    pub fn from_parts(
        fs_hz: f64,
        channel_names: Vec<String>,
        interval: Interval,
        data: Vec<f64>,
        labels: Vec<u8>,
        trial_ids: Vec<u32>,
        rejected: Vec<bool>,
    ) -> Result<Self> {
        if !(fs_hz > 0.0 && fs_hz.is_finite()) {
            return Err(Error::Data(format!("sampling rate must be positive, got {fs_hz}")));
        }
        if channel_names.is_empty() {
            return Err(Error::Data("trial set needs at least one channel".into()));
        }
        check_unique(&channel_names)?;
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Data(format!("labels must be 0 or 1, found {l}")));
        }
        let n_trials = labels.len();
        if trial_ids.len() != n_trials {
            return Err(Error::Dimension {
                expected: n_trials,
                actual: trial_ids.len(),
            });
        }
        if rejected.len() != n_trials {
            return Err(Error::Dimension {
                expected: n_trials,
                actual: rejected.len(),
            });
        }
        let n_samples = interval.n_samples(fs_hz);
        let expected = n_trials * channel_names.len() * n_samples;
        if data.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: data.len(),
            });
        }
        Ok(TrialSet {
            fs_hz,
            channel_names,
            n_samples,
            data,
            labels,
            trial_ids,
            interval,
            rejected,
        })
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn n_trials(&self) -> usize {
        self.labels.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn trial_ids(&self) -> &[u32] {
        &self.trial_ids
    }

    pub fn rejected(&self) -> &[bool] {
        &self.rejected
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One trial as a flat channel-major block.
    pub fn trial(&self, t: usize) -> &[f64] {
        let len = self.n_channels() * self.n_samples;
        &self.data[t * len..(t + 1) * len]
    }

    pub fn channel(&self, t: usize, c: usize) -> &[f64] {
        let start = (t * self.n_channels() + c) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn with_rejected(mut self, rejected: Vec<bool>) -> Result<Self> {
        if rejected.len() != self.n_trials() {
            return Err(Error::Dimension {
                expected: self.n_trials(),
                actual: rejected.len(),
            });
        }
        self.rejected = rejected;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.n_trials() {
            return Err(Error::Dimension {
                expected: self.n_trials(),
                actual: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Applies `f` to every (trial, channel) series. The output series
    /// length defines the new sample count; `fs_hz` and `interval` describe
    /// the result.
    pub fn map_channels<F>(&self, fs_hz: f64, interval: Interval, f: F) -> Result<TrialSet>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        use rayon::prelude::*;
        let n_ch = self.n_channels();
        let blocks: Vec<Vec<f64>> = (0..self.n_trials() * n_ch)
            .into_par_iter()
            .map(|i| f(self.channel(i / n_ch, i % n_ch)))
            .collect();
        let data = blocks.concat();
        TrialSet::from_parts(
            fs_hz,
            self.channel_names.clone(),
            interval,
            data,
            self.labels.clone(),
            self.trial_ids.clone(),
            self.rejected.clone(),
        )
    }

    /// Applies `f` to every trial's channel-major block, keeping the shape.
    pub fn map_trials<F>(&self, f: F) -> TrialSet
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        use rayon::prelude::*;
        let blocks: Vec<Vec<f64>> = (0..self.n_trials())
            .into_par_iter()
            .map(|t| f(self.trial(t)))
            .collect();
        TrialSet {
            data: blocks.concat(),
            ..self.clone()
        }
    }

    /// Keeps only the listed channel rows, in the given order.
    pub fn select_channels(&self, keep: &[usize]) -> Result<TrialSet> {
        if keep.is_empty() {
            return Err(Error::Data("cannot drop every channel".into()));
        }
        let names = keep.iter().map(|&c| self.channel_names[c].clone()).collect();
        let mut data = Vec::with_capacity(self.n_trials() * keep.len() * self.n_samples);
        for t in 0..self.n_trials() {
            for &c in keep {
                data.extend_from_slice(self.channel(t, c));
            }
        }
        TrialSet::from_parts(
            self.fs_hz,
            names,
            self.interval,
            data,
            self.labels.clone(),
            self.trial_ids.clone(),
            self.rejected.clone(),
        )
    }

    /// Sample range `[start, end)` inside each trial that covers `window`.
    pub fn sample_range(&self, window: &Interval) -> Result<(usize, usize)> {
        let offset = ((window.start_ms - self.interval.start_ms) / 1000.0 * self.fs_hz).round() as i64;
        let len = window.n_samples(self.fs_hz) as i64;
        if offset < 0 || offset + len > self.n_samples as i64 {
            return Err(Error::OutOfBounds {
                start: offset,
                end: offset + len,
                len: self.n_samples,
            });
        }
        Ok((offset as usize, (offset + len) as usize))
    }

    /// Cuts every trial down to `window`, which must lie inside the
    /// current interval.
    pub fn cut(&self, window: Interval) -> Result<TrialSet> {
        let (a, b) = self.sample_range(&window)?;
        self.map_channels(self.fs_hz, window, |x| x[a..b].to_vec())
    }

    pub fn scaled(&self, alpha: f64) -> TrialSet {
        TrialSet {
            data: self.data.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }
}

/// JSON manifest accompanying the binary payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub fs_hz: f64,
    pub channel_names: Vec<String>,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub labels: Vec<u8>,
    pub interval_ms: Interval,
    pub units: String,
    pub data_file: String,
    pub dtype: String,
    pub layout: String,
}

impl DatasetManifest {
    pub fn expected_bytes(&self) -> u64 {
        (self.n_trials * self.n_channels * self.n_samples * 4) as u64
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let bad = |reason: String| Error::Manifest {
            path: path.to_path_buf(),
            reason,
        };
        if self.units != UNITS {
            return Err(bad(format!("units must be {UNITS:?}, got {:?}", self.units)));
        }
        if self.dtype != DTYPE {
            return Err(bad(format!("dtype must be {DTYPE:?}, got {:?}", self.dtype)));
        }
        if self.layout != LAYOUT {
            return Err(bad(format!("layout must be {LAYOUT:?}, got {:?}", self.layout)));
        }
        if self.channel_names.len() != self.n_channels {
            return Err(bad(format!(
                "{} channel names for n_channels = {}",
                self.channel_names.len(),
                self.n_channels
            )));
        }
        if self.labels.len() != self.n_trials {
            return Err(bad(format!(
                "{} labels for n_trials = {}",
                self.labels.len(),
                self.n_trials
            )));
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(bad("labels must be binary (0/1)".into()));
        }
        if self.n_trials == 0 {
            return Err(bad("dataset must contain at least one trial".into()));
        }
        let implied = self.interval_ms.n_samples(self.fs_hz);
        if implied != self.n_samples {
            return Err(bad(format!(
                "n_samples = {} but interval and fs_hz imply {implied}",
                self.n_samples
            )));
        }
        if self.data_file.contains('/') || self.data_file.contains('\\') {
            return Err(bad("data_file must be a bare file name".into()));
        }
        Ok(())
    }
}

fn manifest_path_of(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Loads a dataset from its manifest path (or the directory holding
/// `manifest.json`).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<TrialSet> {
    let manifest_path = manifest_path_of(path.as_ref());
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    manifest.validate(&manifest_path)?;

    let data_path = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.data_file);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    if bytes.len() as u64 != manifest.expected_bytes() {
        return Err(Error::SizeMismatch {
            path: data_path,
            expected: manifest.expected_bytes(),
            actual: bytes.len() as u64,
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    TrialSet::new(
        manifest.fs_hz,
        manifest.channel_names,
        manifest.interval_ms,
        data,
        manifest.labels,
    )
}

/// Writes `manifest.json` and `data.f32` into `dir`, creating it if needed.
/// Samples are rounded to `f32`. Returns the manifest path.
pub fn save_dataset(trials: &TrialSet, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    if trials.n_trials() == 0 {
        return Err(Error::Data("refusing to save an empty dataset".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = DatasetManifest {
        fs_hz: trials.fs_hz(),
        channel_names: trials.channel_names().to_vec(),
        n_trials: trials.n_trials(),
        n_channels: trials.n_channels(),
        n_samples: trials.n_samples(),
        labels: trials.labels().to_vec(),
        interval_ms: trials.interval(),
        units: UNITS.into(),
        data_file: DATA_FILE.into(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
    };
    let mut bytes = Vec::with_capacity(trials.data().len() * 4);
    for &v in trials.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let data_path = dir.join(DATA_FILE);
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

/// A labelled event on the recording time axis (ms from the first sample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub onset_ms: f64,
    pub label: u8,
}

/// Cuts `recording` into trials covering `[onset + start, onset + end)` for
/// every event.
pub fn epoch(recording: &Recording, events: &[Event], interval: Interval) -> Result<TrialSet> {
    Interval::new(interval.start_ms, interval.end_ms)?;
    let fs = recording.fs_hz();
    let n = interval.n_samples(fs);
    let mut data = Vec::with_capacity(events.len() * recording.n_channels() * n);
    for ev in events {
        let start = ((ev.onset_ms + interval.start_ms) / 1000.0 * fs).round() as i64;
        if start < 0 || start + n as i64 > recording.len() as i64 {
            return Err(Error::OutOfBounds {
                start,
                end: start + n as i64,
                len: recording.len(),
            });
        }
        let start = start as usize;
        for ch in recording.samples() {
            data.extend_from_slice(&ch[start..start + n]);
        }
    }
    TrialSet::new(
        fs,
        recording.channel_names().to_vec(),
        interval,
        data,
        events.iter().map(|e| e.label).collect(),
    )
}
