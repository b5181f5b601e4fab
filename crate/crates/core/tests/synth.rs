use fbcsp::csp::{class_covariance, fit_csp};
use fbcsp::dataset::{Interval, TrialSet};
use fbcsp::dsp::{design_bandpass, BandSpec, BandSubset};
use fbcsp::pipeline::{make_folds, preprocess, run_band_csp, run_fbcsp, DecodeConfig, PreprocessConfig, WindowSpec};
use fbcsp::synth::{generate, oracle_accuracy, Mixing, SynthConfig};
use nalgebra::DVector;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 4 channels, 2 sources, one-second trials equal to the window; bins at
/// 10, 11 and 12 Hz.
fn compact(ratio: f64, seed: u64) -> SynthConfig {
    let one_second = Interval::new(0.0, 1000.0).unwrap();
    SynthConfig {
        n_channels: 4,
        n_sources: 2,
        n_trials_per_class: [5000, 5000],
        interval: one_second,
        window: one_second,
        planted_band: BandSpec::new(9.5, 12.5),
        variance_ratio: ratio,
        sensor_noise_uv: 20.0,
        seed,
        ..SynthConfig::default()
    }
}

/// Band power of the unmixed source from a direct DFT at `bins_hz`.
fn band_power(trials: &TrialSet, t: usize, unmixing: &[f64], bins_hz: &[f64]) -> f64 {
    let n = trials.n_samples();
    let fs = trials.fs_hz();
    let mut y = vec![0.0; n];
    for (c, &u) in unmixing.iter().enumerate() {
        for (yj, xj) in y.iter_mut().zip(trials.channel(t, c)) {
            *yj += u * xj;
        }
    }
    bins_hz
        .iter()
        .map(|&f| {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in y.iter().enumerate() {
                let ph = 2.0 * std::f64::consts::PI * f * j as f64 / fs;
                a += v * ph.cos();
                b += v * ph.sin();
            }
            let s = 2.0 / n as f64;
            (a * s).powi(2) + (b * s).powi(2)
        })
        .sum()
}

/// Per-coefficient variances of the unmixed band power, from the
/// generator's parameters.
fn coefficient_scales(cfg: &SynthConfig, unmixing: &[f64], n_bins: usize) -> (f64, f64) {
    let l = cfg.window.n_samples(cfg.fs_hz) as f64;
    let u2: f64 = unmixing.iter().map(|u| u * u).sum();
    let source = cfg.source_amplitude_uv.powi(2) / n_bins as f64;
    let noise = 2.0 * cfg.sensor_noise_uv.powi(2) * u2 / l;
    (source + noise, cfg.variance_ratio * source + noise)
}

#[test]
fn oracle_matches_empirical_likelihood_ratio_classifier() {
    let ratio = 2.0;
    let oracle = oracle_accuracy(&compact(ratio, 0), 100_000).unwrap();
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    for batch in 0..10 {
        let cfg = compact(ratio, 1000 + batch);
        let (trials, truth) = generate(&cfg).unwrap();
        let d = 2.0 * truth.planted_bins_hz.len() as f64;
        let (v0, v1) = coefficient_scales(&cfg, &truth.unmixing, truth.planted_bins_hz.len());
        let tau = d * (v1 / v0).ln() / (1.0 / v0 - 1.0 / v1);
        for t in 0..trials.n_trials() {
            let label = trials.labels()[t] as usize;
            let decided = usize::from(band_power(&trials, t, &truth.unmixing, &truth.planted_bins_hz) > tau);
            total[label] += 1;
            correct[label] += usize::from(decided == label);
        }
    }
    assert_eq!(total[0] + total[1], 100_000);
    let p: Vec<f64> = (0..2).map(|c| correct[c] as f64 / total[c] as f64).collect();
    let empirical = 0.5 * (p[0] + p[1]);
    let se = 0.5 * (p[0] * (1.0 - p[0]) / total[0] as f64 + p[1] * (1.0 - p[1]) / total[1] as f64).sqrt();
    let tol = 3.0 * (se * se + oracle.stderr * oracle.stderr).sqrt();
    assert!(
        (empirical - oracle.accuracy).abs() < tol,
        "empirical {empirical} vs oracle {} (tol {tol})",
        oracle.accuracy
    );
}

#[test]
fn oracle_matches_chi_square_cdf() {
    for ratio in [1.5, 4.0] {
        let cfg = SynthConfig {
            variance_ratio: ratio,
            ..SynthConfig::default()
        };
        let (_, truth) = generate(&SynthConfig {
            n_trials_per_class: [1, 1],
            ..cfg.clone()
        })
        .unwrap();
        let n_bins = truth.planted_bins_hz.len();
        let (v0, v1) = coefficient_scales(&cfg, &truth.unmixing, n_bins);
        let d = 2.0 * n_bins as f64;
        let tau = d * (v1 / v0).ln() / (1.0 / v0 - 1.0 / v1);
        let chi = ChiSquared::new(d).unwrap();
        let exact = 0.5 * (chi.cdf(tau / v0) + 1.0 - chi.cdf(tau / v1));
        let mc = oracle_accuracy(&cfg, 200_000).unwrap();
        assert!(
            (mc.accuracy - exact).abs() < 3.0 * mc.stderr,
            "ratio {ratio}: mc {} exact {exact}",
            mc.accuracy
        );
    }
}

#[test]
fn oracle_is_monotone_in_ratio() {
    let mut prev: Option<(f64, f64)> = None;
    for r in [1.0, 1.5, 2.0, 4.0, 8.0] {
        let o = oracle_accuracy(
            &SynthConfig {
                variance_ratio: r,
                ..SynthConfig::default()
            },
            50_000,
        )
        .unwrap();
        assert!((0.5..=1.0).contains(&o.accuracy));
        if let Some((acc, se)) = prev {
            assert!(o.accuracy + 3.0 * (se * se + o.stderr * o.stderr).sqrt() >= acc);
        }
        prev = Some((o.accuracy, o.stderr));
    }
}

#[test]
fn band_power_ratio_tracks_planted_ratio() {
    let cfg = SynthConfig {
        n_trials_per_class: [1000, 1000],
        sensor_noise_uv: 5.0,
        ..compact(4.0, 3)
    };
    let (trials, truth) = generate(&cfg).unwrap();
    let mut sums = [0.0; 2];
    for t in 0..trials.n_trials() {
        sums[trials.labels()[t] as usize] += band_power(&trials, t, &truth.unmixing, &truth.planted_bins_hz);
    }
    let ratio = sums[1] / sums[0];
    assert!((ratio / 4.0 - 1.0).abs() < 0.1, "band-power ratio {ratio}");
}

fn top_filter_and_pattern_cosines(cfg: &SynthConfig) -> (f64, f64) {
    let (trials, truth) = generate(cfg).unwrap();
    let f = design_bandpass(BandSpec::new(10.0, 12.0), 4, trials.fs_hz()).unwrap();
    let band = trials
        .map_channels(trials.fs_hz(), trials.interval(), |x| f.filter(x))
        .unwrap()
        .cut(cfg.window)
        .unwrap();
    let model = fit_csp(&class_covariance(&band, 0).unwrap(), &class_covariance(&band, 1).unwrap()).unwrap();
    let u = DVector::from_column_slice(&truth.unmixing);
    let cos = |v: DVector<f64>| v.dot(&u).abs() / (v.norm() * u.norm());
    (cos(model.filters.column(0).into()), cos(model.patterns.column(0).into()))
}

#[test]
fn csp_recovers_discriminative_direction() {
    // the filter is pinned down only where every spatial direction carries
    // in-band power, which needs broadband noise well above the default
    let loud = SynthConfig {
        n_trials_per_class: [200, 200],
        variance_ratio: 8.0,
        sensor_noise_uv: 100.0,
        seed: 2,
        ..SynthConfig::default()
    };
    let (filter_cos, _) = top_filter_and_pattern_cosines(&loud);
    assert!(filter_cos > 0.95, "filter cosine {filter_cos}");

    let quiet = SynthConfig {
        sensor_noise_uv: 5.0,
        ..loud
    };
    let (_, pattern_cos) = top_filter_and_pattern_cosines(&quiet);
    assert!(pattern_cos > 0.99, "pattern cosine {pattern_cos}");
}

#[test]
fn explicit_mixing_is_used_verbatim() {
    let mixing = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let cfg = SynthConfig {
        n_channels: 3,
        n_sources: 2,
        n_trials_per_class: [2, 2],
        sensor_noise_uv: 0.0,
        mixing: Mixing::Explicit(mixing.clone()),
        ..SynthConfig::default()
    };
    let (trials, truth) = generate(&cfg).unwrap();
    assert_eq!(truth.mixing, mixing);
    // third channel is the sum of the first two
    for t in 0..trials.n_trials() {
        for j in 0..trials.n_samples() {
            let s = trials.channel(t, 0)[j] + trials.channel(t, 1)[j];
            assert!((trials.channel(t, 2)[j] - s).abs() < 1e-3);
        }
    }
}

#[test]
fn identical_classes_decode_at_chance() {
    let cfg = SynthConfig {
        n_channels: 8,
        n_sources: 4,
        n_trials_per_class: [1000, 1000],
        variance_ratio: 1.0,
        ..SynthConfig::default()
    };
    let (raw, _) = generate(&cfg).unwrap();
    let window = WindowSpec::explicit(cfg.window);
    let (trials, _) = preprocess(&raw, &PreprocessConfig::default(), cfg.window).unwrap();
    let plan = make_folds(&trials, 10, 0).unwrap();
    let r = run_band_csp(&trials, BandSpec::new(10.0, 12.0), &plan, &DecodeConfig::new(window)).unwrap();
    assert!((r.accuracy - 0.5).abs() <= 0.02, "accuracy {}", r.accuracy);
}

#[test]
fn pipeline_does_not_beat_the_oracle() {
    let cfg = SynthConfig {
        n_trials_per_class: [200, 200],
        ..SynthConfig::default()
    };
    let (raw, truth) = generate(&cfg).unwrap();
    let window = WindowSpec::explicit(cfg.window);
    let (trials, _) = preprocess(&raw, &PreprocessConfig::default(), cfg.window).unwrap();
    let plan = make_folds(&trials, 10, 0).unwrap();
    let dcfg = DecodeConfig::new(window);
    let n = trials.n_trials() as f64;
    let band = run_band_csp(&trials, cfg.planted_band, &plan, &dcfg).unwrap().accuracy;
    let fb = run_fbcsp(&trials, BandSubset::Below20, &plan, &dcfg).unwrap().accuracy;
    for acc in [band, fb] {
        let se = (acc * (1.0 - acc) / n).sqrt();
        let bound = truth.oracle.accuracy + 3.0 * (se * se + truth.oracle.stderr.powi(2)).sqrt();
        assert!(acc <= bound, "accuracy {acc} above oracle bound {bound}");
    }
}
