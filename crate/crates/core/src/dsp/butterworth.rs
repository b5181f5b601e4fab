//! Butterworth design by pole placement, frequency transformation and the
//! bilinear transform with pre-warping. Sections are assembled directly from
//! conjugate pole pairs, never through an expanded transfer polynomial.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::bank::BandSpec;
use super::filter::{IirFilter, Sos};
use crate::error::{Error, Result};

/// Left-half-plane poles of the unit-cutoff analog prototype.
fn prototype_poles(order: usize) -> Vec<Complex64> {
    let n = order as f64;
    (0..order)
        .map(|k| Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n)))
        .collect()
}

fn prewarp(f_hz: f64, fs_hz: f64) -> f64 {
    2.0 * fs_hz * (PI * f_hz / fs_hz).tan()
}

fn bilinear(s: Complex64, fs_hz: f64) -> Complex64 {
    let k = 2.0 * fs_hz;
    (k + s) / (k - s)
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > 16 {
        return Err(Error::Config(format!("filter order must be in 1..=16, got {order}")));
    }
    Ok(())
}

fn check_edge(f_hz: f64, fs_hz: f64, what: &str) -> Result<()> {
    if !(fs_hz > 0.0) {
        return Err(Error::Config(format!("sampling rate must be positive, got {fs_hz}")));
    }
    if !(f_hz > 0.0 && f_hz < fs_hz / 2.0) {
        return Err(Error::Config(format!(
            "{what} {f_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            fs_hz / 2.0
        )));
    }
    Ok(())
}

/// Groups z-plane poles and zeros into sections, then scales so that
/// `|H|` is one at `ref_hz`.
fn assemble(
    poles: Vec<Complex64>,
    zeros: Vec<f64>,
    fs_hz: f64,
    ref_hz: f64,
    description: String,
) -> IirFilter {
    let tol = 1e-12;
    let mut pairs: Vec<(Complex64, Option<Complex64>)> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for p in &poles {
        if p.im > tol {
            pairs.push((*p, None));
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    for chunk in reals.chunks(2) {
        let a = Complex64::new(chunk[0], 0.0);
        pairs.push((a, chunk.get(1).map(|&r| Complex64::new(r, 0.0))));
    }

    let mut zeros = zeros.into_iter();
    let mut sections: Vec<Sos> = pairs
        .into_iter()
        .map(|(p, q)| {
            let (a1, a2, n_zeros) = match q {
                // complex pole with implied conjugate
                None if p.im > tol => (-2.0 * p.re, p.norm_sqr(), 2),
                // lone real pole
                None => (-p.re, 0.0, 1),
                Some(q) => (-(p.re + q.re), p.re * q.re, 2),
            };
            let z: Vec<f64> = zeros.by_ref().take(n_zeros).collect();
            let (b1, b2) = match z.as_slice() {
                [z1, z2] => (-(z1 + z2), z1 * z2),
                [z1] => (-z1, 0.0),
                _ => (0.0, 0.0),
            };
            Sos { b0: 1.0, b1, b2, a1, a2 }
        })
        .collect();

    let mut filter = IirFilter {
        sections: sections.clone(),
        fs_hz,
        description,
    };
    let gain = filter.magnitude(ref_hz);
    let per_section = gain.powf(1.0 / sections.len() as f64);
    for s in &mut sections {
        s.b0 /= per_section;
        s.b1 /= per_section;
        s.b2 /= per_section;
    }
    filter.sections = sections;
    filter
}

/// Butterworth high-pass with -3 dB point exactly at `cutoff_hz`.
pub fn design_highpass(cutoff_hz: f64, order: usize, fs_hz: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_edge(cutoff_hz, fs_hz, "high-pass cut-off")?;
    let wc = prewarp(cutoff_hz, fs_hz);
    let poles = prototype_poles(order)
        .into_iter()
        .map(|p| bilinear(wc / p, fs_hz))
        .collect();
    Ok(assemble(
        poles,
        vec![1.0; order],
        fs_hz,
        fs_hz / 2.0,
        format!("highpass {cutoff_hz} Hz order {order}"),
    ))
}

/// Butterworth low-pass with -3 dB point exactly at `cutoff_hz`.
pub fn design_lowpass(cutoff_hz: f64, order: usize, fs_hz: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_edge(cutoff_hz, fs_hz, "low-pass cut-off")?;
    let wc = prewarp(cutoff_hz, fs_hz);
    let poles = prototype_poles(order)
        .into_iter()
        .map(|p| bilinear(wc * p, fs_hz))
        .collect();
    Ok(assemble(
        poles,
        vec![-1.0; order],
        fs_hz,
        0.0,
        format!("lowpass {cutoff_hz} Hz order {order}"),
    ))
}

/// Butterworth band-pass built from an `order`-pole prototype (so `2*order`
/// poles in total). Both edges sit at -3 dB; gain is one at the
/// geometric centre of the pre-warped edges.
pub fn design_bandpass(band: BandSpec, order: usize, fs_hz: f64) -> Result<IirFilter> {
    check_order(order)?;
    check_edge(band.lo_hz, fs_hz, "band lower edge")?;
    check_edge(band.hi_hz, fs_hz, "band upper edge")?;
    if band.lo_hz >= band.hi_hz {
        return Err(Error::Config(format!("empty band [{}, {}] Hz", band.lo_hz, band.hi_hz)));
    }
    let w1 = prewarp(band.lo_hz, fs_hz);
    let w2 = prewarp(band.hi_hz, fs_hz);
    let bw = w2 - w1;
    let w0_sq = w1 * w2;
    let mut poles = Vec::with_capacity(2 * order);
    for p in prototype_poles(order) {
        let half = p * (bw / 2.0);
        let root = (half * half - w0_sq).sqrt();
        poles.push(bilinear(half + root, fs_hz));
        poles.push(bilinear(half - root, fs_hz));
    }
    // one zero at DC and one at Nyquist per section
    let zeros = (0..2 * order).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let center_hz = (w0_sq.sqrt() / (2.0 * fs_hz)).atan() * fs_hz / PI;
    Ok(assemble(
        poles,
        zeros,
        fs_hz,
        center_hz,
        format!("bandpass {}-{} Hz order {order}", band.lo_hz, band.hi_hz),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    fn tail_amplitude(y: &[f64], skip: usize) -> f64 {
        y[skip..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn highpass_response_points() {
        let f = design_highpass(0.5, 4, 500.0).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert!(f.magnitude(0.0) < 1e-12);
        assert!((f.magnitude(0.5) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!((f.magnitude(250.0) - 1.0).abs() < 1e-9);
        assert!(f.is_stable());
    }

    #[test]
    fn highpass_step_decays() {
        let f = design_highpass(0.5, 4, 500.0).unwrap();
        let y = f.filter(&vec![1.0; 20_000]);
        // simulated step response: starts near 1, decays to ~0
        assert!(y[0] > 0.9);
        assert!(tail_amplitude(&y, 15_000) < 1e-3);
        assert!(y[19_999].abs() < 1e-4);
    }

    #[test]
    fn lowpass_response_points() {
        let f = design_lowpass(200.0, 8, 5000.0).unwrap();
        assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
        assert!((f.magnitude(200.0) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        // 8th order: at least 40 dB down past 250 Hz... well past it
        assert!(f.magnitude(400.0) < 0.01);
        assert!(f.is_stable());
    }

    #[test]
    fn odd_order_lowpass() {
        let f = design_lowpass(30.0, 3, 500.0).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert!((f.magnitude(30.0) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!(f.is_stable());
    }

    #[test]
    fn bandpass_alpha_band() {
        let f = design_bandpass(BandSpec::new(8.0, 12.0), 4, 500.0).unwrap();
        assert_eq!(f.sections.len(), 4);
        let h10 = f.magnitude(10.0);
        assert!((0.95..=1.05).contains(&h10), "|H(10)| = {h10}");
        assert!(f.magnitude(0.0) < 1e-12);
        assert!(f.magnitude(249.9) < 0.01);
        assert!((f.magnitude(8.0) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!((f.magnitude(12.0) - 1.0 / 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn bandpass_edge_at_nyquist_fails() {
        assert!(design_bandpass(BandSpec::new(100.0, 300.0), 4, 500.0).is_err());
        assert!(design_bandpass(BandSpec::new(100.0, 250.0), 4, 500.0).is_err());
        assert!(design_highpass(0.0, 4, 500.0).is_err());
        assert!(design_highpass(260.0, 4, 500.0).is_err());
    }

    #[test]
    fn bandpass_sine_steady_state() {
        let fs = 500.0;
        let f = design_bandpass(BandSpec::new(8.0, 12.0), 4, fs).unwrap();
        let inside = tail_amplitude(&f.filter(&sine(10.0, fs, 10_000)), 5_000);
        let outside = tail_amplitude(&f.filter(&sine(50.0, fs, 10_000)), 5_000);
        assert!(inside >= 0.9, "10 Hz kept {inside}");
        assert!(outside < 0.05, "50 Hz kept {outside}");
    }

    #[test]
    fn zero_phase_squares_magnitude() {
        let fs = 500.0;
        let f = design_bandpass(BandSpec::new(8.0, 12.0), 4, fs).unwrap();
        let x = sine(9.0, fs, 20_000);
        let y = f.filter_with(&x, super::super::Direction::ZeroPhase);
        let expect = f.magnitude(9.0).powi(2);
        // in the middle, away from both ends, output is an unshifted scaled copy
        for i in 9_000..9_100 {
            assert!((y[i] - expect * x[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn steady_start_removes_dc_transient() {
        let f = design_lowpass(200.0, 8, 5000.0).unwrap();
        let y = f.filter_steady(&vec![3.5; 1000]);
        assert!(y.iter().all(|v| (v - 3.5).abs() < 1e-9));
    }
}
