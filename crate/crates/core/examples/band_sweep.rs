// Frequency-resolved CSP accuracy: one cross-validated classifier per
// band of the filter bank.

use fbcsp::dataset::Interval;
use fbcsp::dsp::{build_filter_bank, BandSpec, FilterBankSpec};
use fbcsp::pipeline::{make_folds, preprocess, run_band_sweep, DecodeConfig, PreprocessConfig, WindowSpec};
use fbcsp::synth::{generate, SynthConfig};

pub fn run_example() -> fbcsp::Result<()> {
    let cfg = SynthConfig {
        n_channels: 10,
        n_trials_per_class: [50, 50],
        n_sources: 5,
        planted_band: BandSpec::new(20.0, 22.0),
        variance_ratio: 6.0,
        seed: 4,
        ..SynthConfig::default()
    };
    let (raw, _) = generate(&cfg)?;
    let window = WindowSpec::explicit(Interval::new(0.0, 2000.0)?);
    let (trials, _) = preprocess(&raw, &PreprocessConfig::default(), window.window)?;
    let plan = make_folds(&trials, 5, 0)?;
    let bank = build_filter_bank(trials.fs_hz(), &FilterBankSpec::default())?;
    let bands: Vec<BandSpec> = bank.bands.iter().copied().filter(|b| b.hi_hz <= 48.0).collect();
    let results = run_band_sweep(&trials, &bands, &plan, &DecodeConfig::new(window))?;
    for r in &results {
        let bar = "#".repeat(((r.accuracy - 0.4).max(0.0) * 60.0) as usize);
        println!("{:<10} {:.3} {bar}", r.band.to_string(), r.accuracy);
    }
    let best = results.iter().max_by(|a, b| a.accuracy.total_cmp(&b.accuracy)).unwrap();
    println!("best band {} (planted {})", best.band, cfg.planted_band);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
