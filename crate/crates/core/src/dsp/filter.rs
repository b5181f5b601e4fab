use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One biquad, `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + z_inv * self.b1 + z2 * self.b2) / (1.0 + z_inv * self.a1 + z2 * self.a2)
    }

    /// Roots of `z^2 + a1 z + a2` (a first-order section has `a2 == 0` and
    /// a spurious root at the origin).
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }
}

/// Filtering direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Single forward pass, zero initial state.
    #[default]
    Causal,
    /// Forward then backward pass; squared magnitude, zero phase.
    ZeroPhase,
}

/// Cascade of second-order sections designed for one sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirFilter {
    pub sections: Vec<Sos>,
    pub fs_hz: f64,
    pub description: String,
}

impl IirFilter {
    /// Causal pass with zero initial conditions.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.filter_in_place(&mut y, None);
        y
    }

    pub fn filter_with(&self, x: &[f64], direction: Direction) -> Vec<f64> {
        match direction {
            Direction::Causal => self.filter(x),
            Direction::ZeroPhase => {
                let mut y = x.to_vec();
                self.filter_in_place(&mut y, None);
                y.reverse();
                self.filter_in_place(&mut y, None);
                y.reverse();
                y
            }
        }
    }

    /// Causal pass whose state starts at the steady state for a constant
    /// input equal to `x[0]`, so a DC offset produces no start-up transient.
    pub fn filter_steady(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let x0 = x.first().copied().unwrap_or(0.0);
        self.filter_in_place(&mut y, Some(x0));
        y
    }

    fn filter_in_place(&self, y: &mut [f64], steady_input: Option<f64>) {
        let mut level = steady_input;
        for s in &self.sections {
            // transposed direct form II
            let (mut z1, mut z2) = match level {
                Some(u) => {
                    let out = s.dc_gain() * u;
                    let z2 = s.b2 * u - s.a2 * out;
                    level = Some(out);
                    (s.b1 * u - s.a1 * out + z2, z2)
                }
                None => (0.0, 0.0),
            };
            for v in y.iter_mut() {
                let x = *v;
                let out = s.b0 * x + z1;
                z1 = s.b1 * x - s.a1 * out + z2;
                z2 = s.b2 * x - s.a2 * out;
                *v = out;
            }
        }
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * f_hz / self.fs_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn max_pole_modulus(&self) -> f64 {
        self.poles().iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_modulus() < 1.0 - 1e-9
    }
}

/// Filters `signal`, sampled at `fs_hz`, causally from a zero state.
pub fn apply_filter(filter: &IirFilter, signal: &[f64], fs_hz: f64) -> Result<Vec<f64>> {
    if (filter.fs_hz - fs_hz).abs() > 1e-9 * fs_hz.abs().max(1.0) {
        return Err(Error::Config(format!(
            "filter designed for {} Hz applied to a {} Hz signal",
            filter.fs_hz, fs_hz
        )));
    }
    Ok(filter.filter(signal))
}
