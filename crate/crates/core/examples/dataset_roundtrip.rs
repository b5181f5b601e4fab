// Epochs a continuous recording around events, writes the trials to disk
// and reads them back.

use fbcsp::dataset::{epoch, load_dataset, save_dataset, Event, Interval, Recording};

pub fn run_example() -> fbcsp::Result<()> {
    let fs = 500.0;
    let n = 20_000;
    let samples: Vec<Vec<f64>> = (0..4)
        .map(|c| (0..n).map(|i| ((i * (c + 1)) as f64 * 0.01).sin() * 20.0).collect())
        .collect();
    let names = ["Fz", "Cz", "Pz", "Oz"].iter().map(|s| s.to_string()).collect();
    let recording = Recording::new(fs, names, samples)?;

    let events: Vec<Event> = (0..6)
        .map(|i| Event {
            onset_ms: 2000.0 + 5000.0 * i as f64,
            label: (i % 2) as u8,
        })
        .collect();
    let trials = epoch(&recording, &events, Interval::new(-500.0, 3000.0)?)?;
    println!(
        "{} trials x {} channels x {} samples, classes {:?}",
        trials.n_trials(),
        trials.n_channels(),
        trials.n_samples(),
        trials.class_counts()
    );

    let dir = std::env::temp_dir().join(format!("fbcsp-roundtrip-{}", std::process::id()));
    let manifest = save_dataset(&trials, &dir)?;
    println!("wrote {}", manifest.display());
    let back = load_dataset(&manifest)?;
    let max_err = trials
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max round-trip error {max_err:.2e} uV (float32 storage)");
    assert_eq!(back.labels(), trials.labels());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
