//! Preprocessing, cross-validated CSP and FBCSP decoding, and reporting.

mod decode;
mod folds;
mod intervals;
mod preprocess;
mod report;

pub use decode::{
    audit_leakage, band_covariances, decode_band, decode_fbcsp, run_band_csp, run_band_sweep, run_fbcsp,
    BandCovariances, BandResult, DecodeConfig, FbcspResult, FoldRecord, TrialPrediction,
};
pub use folds::{make_folds, make_folds_with, FoldPlan, FoldScheme, DEFAULT_FOLDS};
pub use intervals::{Experiment, NamedInterval, WindowSpec};
pub use preprocess::{preprocess, PreprocessConfig, RejectionConfig};
pub use report::*;

pub use crate::metrics::balanced_accuracy;
