// Preprocessing on synthetic data with injected artifacts and one broken
// channel: high-pass, noisy-channel removal, amplitude rejection, CAR.

use fbcsp::dataset::{Interval, TrialSet};
use fbcsp::pipeline::{preprocess, PreprocessConfig};
use fbcsp::synth::{generate, ArtifactConfig, SynthConfig};

pub fn run_example() -> fbcsp::Result<()> {
    let cfg = SynthConfig {
        n_channels: 12,
        n_trials_per_class: [30, 20],
        artifacts: Some(ArtifactConfig {
            fraction: 0.1,
            amplitude_uv: 800.0,
            duration_ms: 40.0,
        }),
        seed: 11,
        ..SynthConfig::default()
    };
    let (trials, _) = generate(&cfg)?;
    // channel 3 picks up mains-like interference at 50x the usual amplitude
    let n_s = trials.n_samples();
    let broken = trials.map_trials(|block| {
        let mut b = block.to_vec();
        for (j, v) in b[3 * n_s..4 * n_s].iter_mut().enumerate() {
            *v += 300.0 * (j as f64 * 0.6).sin();
        }
        b
    });
    let trials = TrialSet::from_parts(
        broken.fs_hz(),
        broken.channel_names().to_vec(),
        broken.interval(),
        broken.data().to_vec(),
        broken.labels().to_vec(),
        broken.trial_ids().to_vec(),
        broken.rejected().to_vec(),
    )?;

    let window = Interval::new(0.0, 2000.0)?;
    let (clean, report) = preprocess(&trials, &PreprocessConfig::default(), window)?;
    for c in &report.removed_channels {
        println!("removed {} (robust z = {:.1})", c.name, c.score);
    }
    for r in &report.rejected_trials {
        println!("rejected trial {} ({:.0} uV peak-to-peak)", r.trial_id, r.peak_to_peak_uv);
    }
    println!(
        "{} of {} trials kept for training, {} channels remain",
        clean.rejected().iter().filter(|r| !**r).count(),
        clean.n_trials(),
        clean.n_channels()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
