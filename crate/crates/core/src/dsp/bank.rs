use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency band `[lo_hz, hi_hz]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl BandSpec {
    pub const fn new(lo_hz: f64, hi_hz: f64) -> Self {
        BandSpec { lo_hz, hi_hz }
    }

    pub fn width(&self) -> f64 {
        self.hi_hz - self.lo_hz
    }

    /// True when the bands share an interval of positive length.
    pub fn overlaps(&self, other: &BandSpec) -> bool {
        self.lo_hz < other.hi_hz && other.lo_hz < self.hi_hz
    }
}

impl std::fmt::Display for BandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{} Hz", self.lo_hz, self.hi_hz)
    }
}

/// Edge grid of the filter bank: narrow bands up to `split_hz`, wide bands
/// above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterBankSpec {
    pub low_edge_hz: f64,
    pub split_hz: f64,
    pub high_edge_hz: f64,
    pub low_bw_hz: f64,
    pub high_bw_hz: f64,
}

impl Default for FilterBankSpec {
    fn default() -> Self {
        FilterBankSpec {
            low_edge_hz: 0.5,
            split_hz: 30.0,
            high_edge_hz: 144.0,
            low_bw_hz: 2.0,
            high_bw_hz: 6.0,
        }
    }
}

/// Named band subsets used for the pooled (filter-bank) classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandSubset {
    All,
    Below20,
    Above60,
}

impl BandSubset {
    pub const ALL: [BandSubset; 3] = [BandSubset::All, BandSubset::Below20, BandSubset::Above60];

    pub fn contains(&self, band: &BandSpec) -> bool {
        match self {
            BandSubset::All => true,
            BandSubset::Below20 => band.hi_hz <= 20.0 + 1e-9,
            BandSubset::Above60 => band.lo_hz >= 60.0 - 1e-9,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BandSubset::All => "all",
            BandSubset::Below20 => "below20",
            BandSubset::Above60 => "above60",
        }
    }
}

impl std::str::FromStr for BandSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(BandSubset::All),
            "below20" => Ok(BandSubset::Below20),
            "above60" => Ok(BandSubset::Above60),
            other => Err(Error::Config(format!(
                "unknown band subset {other:?} (expected all, below20 or above60)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub bands: Vec<BandSpec>,
    pub fs_hz: f64,
}

impl FilterBank {
    pub fn subset(&self, subset: BandSubset) -> Vec<BandSpec> {
        self.bands.iter().copied().filter(|b| subset.contains(b)).collect()
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// Edges from `from` to `to`: `from`, then every multiple of `step`
/// strictly between, then `to`.
fn grid(from: f64, to: f64, step: f64, anchor: f64) -> Vec<f64> {
    let mut edges = vec![from];
    let mut k = ((from - anchor) / step + 1e-9).floor() as i64 + 1;
    loop {
        let e = anchor + k as f64 * step;
        if e >= to - 1e-9 {
            break;
        }
        edges.push(e);
        k += 1;
    }
    edges.push(to);
    edges
}

/// Builds the contiguous band grid. With the defaults at 500 Hz this gives
/// `[0.5,2], [2,4], ..., [28,30]` followed by `[30,36], ..., [138,144]`.
pub fn build_filter_bank(fs_hz: f64, spec: &FilterBankSpec) -> Result<FilterBank> {
    let FilterBankSpec {
        low_edge_hz,
        split_hz,
        high_edge_hz,
        low_bw_hz,
        high_bw_hz,
    } = *spec;
    if !(low_bw_hz > 0.0 && high_bw_hz > 0.0) {
        return Err(Error::Config("band widths must be positive".into()));
    }
    if !(0.0 < low_edge_hz && low_edge_hz < split_hz && split_hz < high_edge_hz) {
        return Err(Error::Config(format!(
            "band edges must satisfy 0 < {low_edge_hz} < {split_hz} < {high_edge_hz}"
        )));
    }
    if high_edge_hz >= fs_hz / 2.0 {
        return Err(Error::Config(format!(
            "upper band edge {high_edge_hz} Hz must be below Nyquist ({} Hz)",
            fs_hz / 2.0
        )));
    }
    let mut edges = grid(low_edge_hz, split_hz, low_bw_hz, 0.0);
    edges.pop();
    edges.extend(grid(split_hz, high_edge_hz, high_bw_hz, split_hz));
    let bands = edges.windows(2).map(|w| BandSpec::new(w[0], w[1])).collect();
    Ok(FilterBank { bands, fs_hz })
}
