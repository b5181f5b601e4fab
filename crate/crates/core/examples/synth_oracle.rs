// Bayes-optimal accuracy of the synthetic task as the planted power ratio
// grows.

use fbcsp::synth::{oracle_accuracy, oracle_statistic, SynthConfig};

pub fn run_example() -> fbcsp::Result<()> {
    let base = SynthConfig::default();
    let (dof, _) = oracle_statistic(&base)?;
    println!(
        "planted band {} over a {} ms window: band power has {dof} degrees of freedom",
        base.planted_band,
        base.window.duration_ms()
    );
    println!("{:>6} {:>9} {:>8}", "ratio", "oracle", "stderr");
    for r in [1.0, 1.5, 2.0, 4.0, 8.0, 32.0] {
        let cfg = SynthConfig {
            variance_ratio: r,
            ..base.clone()
        };
        let o = oracle_accuracy(&cfg, 100_000)?;
        println!("{r:>6} {:>9.4} {:>8.4}", o.accuracy, o.stderr);
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
