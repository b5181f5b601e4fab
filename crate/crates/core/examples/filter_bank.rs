// Builds the 34-band filter bank and prints each band-pass filter's gain
// at its centre and edges.

use fbcsp::dsp::{build_filter_bank, design_bandpass, BandSubset, FilterBankSpec, FILTER_ORDER};

pub fn run_example() -> fbcsp::Result<()> {
    let fs = 500.0;
    let bank = build_filter_bank(fs, &FilterBankSpec::default())?;
    println!("{} bands at {fs} Hz", bank.len());
    for subset in BandSubset::ALL {
        println!("  {:<8} {} bands", subset.tag(), bank.subset(subset).len());
    }
    println!("\n{:<12} {:>8} {:>8} {:>8} {:>10}", "band", "|H(lo)|", "|H(c)|", "|H(hi)|", "max |pole|");
    for band in &bank.bands {
        let f = design_bandpass(*band, FILTER_ORDER, fs)?;
        let centre = (band.lo_hz * band.hi_hz).sqrt();
        println!(
            "{:<12} {:>8.3} {:>8.3} {:>8.3} {:>10.6}",
            band.to_string(),
            f.magnitude(band.lo_hz),
            f.magnitude(centre),
            f.magnitude(band.hi_hz),
            f.max_pole_modulus()
        );
        assert!(f.is_stable());
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
