//! Synthetic EEG trials with a planted band-power effect and a known
//! Bayes-optimal accuracy.
//!
//! Every source is periodic with period equal to the decoding window and is
//! built from sinusoids at the window's DFT bins, with iid Gaussian cosine
//! and sine coefficients. Inside any window-length stretch the discriminative
//! source's band power is therefore exactly a scaled chi-square with
//! `2 * n_bins` degrees of freedom, and the class difference is a factor
//! `variance_ratio` on its scale. Sensors are `mixing * sources` plus white
//! Gaussian noise.
//!
//! The oracle is the likelihood-ratio test on that band power after
//! unmixing with the true mixing matrix, estimated by Monte Carlo.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataset::{Interval, TrialSet};
use crate::dsp::BandSpec;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Bands of the class-independent background sources, used cyclically.
pub const BACKGROUND_BANDS: [BandSpec; 6] = [
    BandSpec::new(1.0, 4.0),
    BandSpec::new(8.0, 13.0),
    BandSpec::new(4.0, 8.0),
    BandSpec::new(13.0, 30.0),
    BandSpec::new(30.0, 45.0),
    BandSpec::new(60.0, 90.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    RandomOrthonormal,
    /// `n_channels` rows of `n_sources` weights.
    Explicit(Vec<Vec<f64>>),
}

/// Square pulses injected to exercise amplitude-based rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtifactConfig {
    /// Probability that a trial receives a pulse.
    pub fraction: f64,
    pub amplitude_uv: f64,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub n_trials_per_class: [usize; 2],
    pub fs_hz: f64,
    /// Span of each generated trial relative to its event.
    pub interval: Interval,
    /// Decoding window: sets the source period and the oracle.
    pub window: Interval,
    pub planted_band: BandSpec,
    pub variance_ratio: f64,
    pub n_sources: usize,
    pub mixing: Mixing,
    /// Standard deviation of a unit-variance source at the sensors (uV).
    pub source_amplitude_uv: f64,
    pub sensor_noise_uv: f64,
    pub artifacts: Option<ArtifactConfig>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_channels: 16,
            n_trials_per_class: [200, 200],
            fs_hz: 500.0,
            interval: Interval {
                start_ms: -1000.0,
                end_ms: 2000.0,
            },
            window: Interval {
                start_ms: 0.0,
                end_ms: 2000.0,
            },
            planted_band: BandSpec::new(10.0, 12.0),
            variance_ratio: 4.0,
            n_sources: 6,
            mixing: Mixing::RandomOrthonormal,
            source_amplitude_uv: 10.0,
            sensor_noise_uv: 5.0,
            artifacts: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub accuracy: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `n_channels` rows of `n_sources` weights.
    pub mixing: Vec<Vec<f64>>,
    pub discriminative_source: usize,
    /// Spatial filter that recovers the discriminative source exactly.
    pub unmixing: Vec<f64>,
    pub planted_bins_hz: Vec<f64>,
    pub oracle: OracleEstimate,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.variance_ratio >= 1.0 && self.variance_ratio.is_finite()) {
            return bad(format!("variance ratio must be >= 1, got {}", self.variance_ratio));
        }
        if self.n_channels == 0 || self.n_sources == 0 || self.n_sources > self.n_channels {
            return bad(format!(
                "need 1 <= n_sources ({}) <= n_channels ({})",
                self.n_sources, self.n_channels
            ));
        }
        if self.n_trials_per_class.contains(&0) {
            return bad("each class needs at least one trial".into());
        }
        if !(self.fs_hz > 0.0) {
            return bad(format!("sampling rate must be positive, got {}", self.fs_hz));
        }
        Interval::new(self.interval.start_ms, self.interval.end_ms)?;
        Interval::new(self.window.start_ms, self.window.end_ms)?;
        if !self.interval.contains(&self.window) {
            return bad(format!("trial span {} must cover the window {}", self.interval, self.window));
        }
        let b = self.planted_band;
        if !(b.lo_hz > 0.0 && b.lo_hz < b.hi_hz && b.hi_hz < self.fs_hz / 2.0) {
            return bad(format!("planted band {b} invalid at {} Hz", self.fs_hz));
        }
        if self.planted_bins().is_empty() {
            return bad(format!(
                "no frequency bin of the {} ms window falls strictly inside {b}",
                self.window.duration_ms()
            ));
        }
        if !(self.source_amplitude_uv > 0.0) || !(self.sensor_noise_uv >= 0.0) {
            return bad("source amplitude must be positive and noise non-negative".into());
        }
        if let Mixing::Explicit(m) = &self.mixing {
            if m.len() != self.n_channels || m.iter().any(|r| r.len() != self.n_sources) {
                return bad(format!(
                    "explicit mixing must be {} x {}",
                    self.n_channels, self.n_sources
                ));
            }
        }
        if let Some(a) = self.artifacts {
            if !(0.0..=1.0).contains(&a.fraction) || !(a.duration_ms > 0.0) {
                return bad("artifact fraction must be in [0, 1] and duration positive".into());
            }
        }
        Ok(())
    }

    fn period(&self) -> usize {
        self.window.n_samples(self.fs_hz)
    }

    fn bins_in(&self, band: BandSpec, strict: bool) -> Vec<usize> {
        let l = self.period();
        let df = self.fs_hz / l as f64;
        (1..l.div_ceil(2))
            .filter(|&k| {
                let f = k as f64 * df;
                if strict {
                    f > band.lo_hz + 1e-9 && f < band.hi_hz - 1e-9
                } else {
                    f >= band.lo_hz - 1e-9 && f <= band.hi_hz + 1e-9
                }
            })
            .collect()
    }

    /// DFT bins of the window strictly inside the planted band.
    pub fn planted_bins(&self) -> Vec<usize> {
        self.bins_in(self.planted_band, true)
    }

    fn source_bins(&self, source: usize) -> Vec<usize> {
        if source == 0 {
            self.planted_bins()
        } else {
            let band = BACKGROUND_BANDS[(source - 1) % BACKGROUND_BANDS.len()];
            let bins = self.bins_in(band, false);
            if bins.is_empty() {
                self.planted_bins()
            } else {
                bins
            }
        }
    }

    fn mixing_matrix(&self) -> DMatrix<f64> {
        match &self.mixing {
            Mixing::Explicit(rows) => DMatrix::from_fn(self.n_channels, self.n_sources, |i, j| rows[i][j]),
            Mixing::RandomOrthonormal => {
                let mut rng = seed::rng(self.seed, stream::SYNTH_MIXING, 0);
                let g = DMatrix::from_fn(self.n_channels, self.n_sources, |_, _| rng.sample::<f64, _>(StandardNormal));
                let qr = g.qr();
                let mut q = qr.q();
                let r = qr.r();
                // fix column signs so the factorization is unique
                for j in 0..self.n_sources {
                    if r[(j, j)] < 0.0 {
                        q.column_mut(j).neg_mut();
                    }
                }
                q
            }
        }
    }

    fn unmixing(&self, mixing: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        mixing
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Numerical(format!("mixing matrix pseudo-inverse failed: {e}")))
    }

    /// Per-component coefficient variances `[class0, class1]` of the
    /// unmixed discriminative source, noise included.
    fn coefficient_variances(&self, unmix_row_norm_sq: f64) -> [f64; 2] {
        let n_bins = self.planted_bins().len() as f64;
        let l = self.period() as f64;
        let source = self.source_amplitude_uv.powi(2) / n_bins;
        let noise = 2.0 * self.sensor_noise_uv.powi(2) * unmix_row_norm_sq / l;
        [source + noise, self.variance_ratio * source + noise]
    }
}

/// One periodic band-limited Gaussian block of length `l`.
fn periodic_source(fft: &Arc<dyn Fft<f64>>, l: usize, bins: &[usize], sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    for &k in bins {
        let a: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
        let b: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
        let c = Complex64::new(a / 2.0, -b / 2.0);
        buf[k] = c;
        buf[l - k] = c.conj();
    }
    fft.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Generates the trial set and its ground truth. Deterministic in
/// `config.seed`; trials are generated independently from counter-derived
/// seeds.
pub fn generate(config: &SynthConfig) -> Result<(TrialSet, GroundTruth)> {
    config.validate()?;
    let mixing = config.mixing_matrix();
    let unmix = config.unmixing(&mixing)?;
    let l = config.period();
    let n_s = config.interval.n_samples(config.fs_hz);
    let offset = ((config.window.start_ms - config.interval.start_ms) / 1000.0 * config.fs_hz).round() as usize;
    let [n0, n1] = config.n_trials_per_class;
    let n_trials = n0 + n1;

    let mut labels: Vec<u8> = std::iter::repeat_n(0u8, n0).chain(std::iter::repeat_n(1u8, n1)).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = seed::rng(config.seed, stream::SYNTH_LABELS, 0);
        labels.shuffle(&mut rng);
    }

    let fft = FftPlanner::<f64>::new().plan_fft_inverse(l);
    let bins: Vec<Vec<usize>> = (0..config.n_sources).map(|s| config.source_bins(s)).collect();
    let n_ch = config.n_channels;
    let trials: Vec<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(config.seed, stream::SYNTH_TRIAL, t as u64);
            let sources: Vec<Vec<f64>> = (0..config.n_sources)
                .map(|s| {
                    let var = if s == 0 && labels[t] == 1 { config.variance_ratio } else { 1.0 };
                    let sd = (var / bins[s].len() as f64).sqrt();
                    periodic_source(&fft, l, &bins[s], sd, &mut rng)
                })
                .collect();
            let mut block = vec![0.0; n_ch * n_s];
            for c in 0..n_ch {
                let row = &mut block[c * n_s..(c + 1) * n_s];
                for (j, v) in row.iter_mut().enumerate() {
                    let idx = (j + l - offset % l) % l;
                    let mut acc = 0.0;
                    for (s, src) in sources.iter().enumerate() {
                        acc += mixing[(c, s)] * src[idx];
                    }
                    let noise: f64 = rng.sample(StandardNormal);
                    *v = config.source_amplitude_uv * acc + config.sensor_noise_uv * noise;
                }
            }
            if let Some(a) = config.artifacts {
                let mut arng = seed::rng(config.seed, stream::ARTIFACT, t as u64);
                if arng.random::<f64>() < a.fraction {
                    let len = ((a.duration_ms / 1000.0 * config.fs_hz).round() as usize).clamp(1, l);
                    let c = arng.random_range(0..n_ch);
                    let start = offset + arng.random_range(0..=l - len);
                    for v in &mut block[c * n_s + start..c * n_s + start + len] {
                        *v += a.amplitude_uv;
                    }
                }
            }
            // stored precision is f32; round now so memory and disk agree
            block.iter_mut().for_each(|v| *v = *v as f32 as f64);
            block
        })
        .collect();

    let names = (1..=n_ch).map(|i| format!("E{i:03}")).collect();
    let set = TrialSet::new(config.fs_hz, names, config.interval, trials.concat(), labels)?;
    let truth = GroundTruth {
        mixing: (0..n_ch).map(|i| mixing.row(i).iter().copied().collect()).collect(),
        discriminative_source: 0,
        unmixing: unmix.row(0).iter().copied().collect(),
        planted_bins_hz: config
            .planted_bins()
            .iter()
            .map(|&k| k as f64 * config.fs_hz / l as f64)
            .collect(),
        oracle: oracle_accuracy(config, 20_000)?,
    };
    Ok((set, truth))
}

/// Likelihood-ratio threshold between two scaled chi-square laws with `dof`
/// degrees of freedom and scales `v0 < v1`.
pub fn lrt_threshold(dof: f64, v0: f64, v1: f64) -> f64 {
    dof * (v1 / v0).ln() / (1.0 / v0 - 1.0 / v1)
}

/// Scales and degrees of freedom of the oracle statistic for `config`.
pub fn oracle_statistic(config: &SynthConfig) -> Result<(usize, [f64; 2])> {
    config.validate()?;
    let unmix = config.unmixing(&config.mixing_matrix())?;
    let norm_sq = unmix.row(0).norm_squared();
    Ok((2 * config.planted_bins().len(), config.coefficient_variances(norm_sq)))
}

/// Bayes-optimal balanced accuracy of the band-power likelihood-ratio test,
/// by Monte Carlo over `n_mc` statistics (half per class), with its
/// binomial standard error. Exactly 0.5 when the classes coincide.
pub fn oracle_accuracy(config: &SynthConfig, n_mc: usize) -> Result<OracleEstimate> {
    if n_mc < 1000 {
        return Err(Error::Config(format!("oracle needs at least 1000 Monte-Carlo draws, got {n_mc}")));
    }
    let (dof, [v0, v1]) = oracle_statistic(config)?;
    if config.variance_ratio == 1.0 {
        return Ok(OracleEstimate {
            accuracy: 0.5,
            stderr: 0.0,
            n_mc,
        });
    }
    let tau = lrt_threshold(dof as f64, v0, v1);
    let mut rng = seed::rng(config.seed, stream::ORACLE, 0);
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    for i in 0..n_mc {
        let class = i % 2;
        let v = if class == 0 { v0 } else { v1 };
        let t: f64 = (0..dof).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum::<f64>() * v;
        let decided = usize::from(t > tau);
        total[class] += 1;
        correct[class] += usize::from(decided == class);
    }
    let p = [correct[0] as f64 / total[0] as f64, correct[1] as f64 / total[1] as f64];
    let stderr = 0.5 * (p[0] * (1.0 - p[0]) / total[0] as f64 + p[1] * (1.0 - p[1]) / total[1] as f64).sqrt();
    Ok(OracleEstimate {
        accuracy: 0.5 * (p[0] + p[1]),
        stderr,
        n_mc,
    })
}
