// End-to-end decoding of an unbalanced synthetic dataset: preprocessing,
// stratified folds, FBCSP on the three band subsets and randomization
// p-values.

use fbcsp::dataset::Interval;
use fbcsp::dsp::{build_filter_bank, BandSubset, FilterBankSpec};
use fbcsp::pipeline::{
    audit_leakage, band_covariances, decode_fbcsp, make_folds, preprocess, table_row, DecodeConfig, PreprocessConfig,
    SdKind, WindowSpec,
};
use fbcsp::stats::PermutationConfig;
use fbcsp::synth::{generate, SynthConfig};

pub fn run_example() -> fbcsp::Result<()> {
    let cfg = SynthConfig {
        n_channels: 12,
        n_trials_per_class: [72, 48],
        seed: 8,
        ..SynthConfig::default()
    };
    let (raw, truth) = generate(&cfg)?;
    println!("oracle accuracy {:.3} +/- {:.3}", truth.oracle.accuracy, truth.oracle.stderr);

    let window = WindowSpec::explicit(Interval::new(0.0, 2000.0)?);
    let (trials, _) = preprocess(&raw, &PreprocessConfig::default(), window.window)?;
    let plan = make_folds(&trials, 10, 0)?;
    let dcfg = DecodeConfig::new(window);
    let bank = build_filter_bank(trials.fs_hz(), &FilterBankSpec::default())?;
    let covs = bank
        .bands
        .iter()
        .map(|&b| band_covariances(&trials, b, &dcfg))
        .collect::<fbcsp::Result<Vec<_>>>()?;
    let perm = PermutationConfig {
        n_resamples: 20_000,
        ..PermutationConfig::default()
    };
    for subset in BandSubset::ALL {
        let r = decode_fbcsp(&trials, &covs, subset, &plan, &dcfg)?.with_significance(&perm)?;
        assert!(audit_leakage(&trials, &plan, &r.folds, &r.predictions).is_empty());
        println!("{}  ({} features)", table_row(&r, SdKind::Sample), r.n_features);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
