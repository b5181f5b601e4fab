//! IIR filtering: Butterworth design as second-order sections, causal and
//! zero-phase application, decimation and the filter-bank grid.

mod bank;
mod butterworth;
mod filter;
mod resample;

pub use bank::{build_filter_bank, BandSpec, BandSubset, FilterBank, FilterBankSpec};
pub use butterworth::{design_bandpass, design_highpass, design_lowpass};
pub use filter::{apply_filter, Direction, IirFilter, Sos};
pub use resample::{anti_alias_filter, downsample, downsample_trials};

/// Default high-pass cut-off (Hz).
pub const HIGHPASS_CUTOFF_HZ: f64 = 0.5;
/// Default Butterworth order for both the high-pass and the band-pass bank.
pub const FILTER_ORDER: usize = 4;
/// Sampling rate all decoding runs at (Hz).
pub const TARGET_FS_HZ: f64 = 500.0;
