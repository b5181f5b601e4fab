pub mod cleaning;
pub mod cli;
pub mod csp;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod rlda;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
