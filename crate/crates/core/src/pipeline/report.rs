use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::decode::{BandResult, FbcspResult};
use super::folds::FoldScheme;
use super::intervals::Experiment;
use super::preprocess::PreprocessConfig;
use crate::cleaning::CleaningReport;
use crate::dsp::{BandSpec, BandSubset, Direction};
use crate::rlda::Shrinkage;
use crate::stats::{significance_stars, PermutationConfig};

/// Which standard deviation reports use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdKind {
    /// `n - 1` denominator.
    #[default]
    Sample,
    Population,
}

/// Mean and standard deviation; the deviation of a single value is 0.
pub fn mean_sd(values: &[f64], kind: SdKind) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match kind {
        SdKind::Sample => (n - 1) as f64,
        SdKind::Population => n as f64,
    };
    Some((mean, (ss / denom).sqrt()))
}

/// `"0.620 (0.020)"`.
pub fn format_cell(mean: f64, sd: f64) -> String {
    format!("{mean:.3} ({sd:.3})")
}

/// Formatted mean and deviation of `values`, `"-"` when empty.
pub fn summarize(values: &[f64], kind: SdKind) -> String {
    match mean_sd(values, kind) {
        Some((m, s)) => format_cell(m, s),
        None => "-".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub fold_scheme: FoldScheme,
    pub experiment: Experiment,
    pub filter_order: usize,
    pub direction: Direction,
    pub shrinkage: Shrinkage,
    pub preprocess: PreprocessConfig,
    pub permutation: Option<PermutationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_trials: usize,
    pub n_channels: usize,
    pub fs_hz: f64,
    pub class_counts: [usize; 2],
}

/// Everything one decoding run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub settings: RunSettings,
    /// Shape after preprocessing.
    pub dataset: DatasetSummary,
    pub cleaning: CleaningReport,
    pub fbcsp: Vec<FbcspResult>,
    pub bands: Vec<BandResult>,
}

fn fold_values(folds: &[Option<f64>]) -> Vec<f64> {
    folds.iter().flatten().copied().collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn fbcsp_csv(results: &[FbcspResult], kind: SdKind) -> String {
    let mut s = String::from(
        "subset,interval,start_ms,end_ms,n_bands,n_features,accuracy,mean_fold_accuracy,fold_sd,p_value\n",
    );
    for r in results {
        let sd = mean_sd(&fold_values(&r.fold_accuracies), kind).map(|(_, s)| s);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.subset.tag(),
            r.interval.tag,
            r.interval.window.start_ms,
            r.interval.window.end_ms,
            r.bands.len(),
            r.n_features,
            r.accuracy,
            r.mean_fold_accuracy,
            opt(sd),
            opt(r.p_value),
        );
    }
    s
}

/// Frequency-resolved rows: `band_lo,band_hi,accuracy`.
pub fn bands_csv(results: &[BandResult]) -> String {
    let mut s = String::from("band_lo_hz,band_hi_hz,accuracy,mean_fold_accuracy\n");
    for r in results {
        let _ = writeln!(s, "{},{},{},{}", r.band.lo_hz, r.band.hi_hz, r.accuracy, r.mean_fold_accuracy);
    }
    s
}

/// Whitespace-separated curve for plotting tools, band centre first.
pub fn bands_tsv(results: &[BandResult]) -> String {
    let mut s = String::from("# centre_hz\tband_lo_hz\tband_hi_hz\taccuracy\n");
    for r in results {
        let c = 0.5 * (r.band.lo_hz + r.band.hi_hz);
        let _ = writeln!(s, "{c}\t{}\t{}\t{:.6}", r.band.lo_hz, r.band.hi_hz, r.accuracy);
    }
    s
}

/// One printable line per FBCSP result: fold mean and deviation, pooled
/// accuracy and p-value.
pub fn table_row(r: &FbcspResult, kind: SdKind) -> String {
    let mut line = format!(
        "{:<8} {:<12} {}  pooled {:.3}",
        r.subset.tag(),
        r.interval.tag,
        summarize(&fold_values(&r.fold_accuracies), kind),
        r.accuracy
    );
    if let Some(p) = r.p_value {
        let _ = write!(line, "  p={p:.5}{}", significance_stars(p));
    }
    line
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub subset: BandSubset,
    pub interval: String,
    pub n_runs: usize,
    pub mean: f64,
    pub sd: f64,
    pub cell: String,
}

/// Pooled accuracies across runs, one row per (subset, interval).
pub fn aggregate(reports: &[DecodeReport], kind: SdKind) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(BandSubset, String), Vec<f64>> = BTreeMap::new();
    for rep in reports {
        for r in &rep.fbcsp {
            groups
                .entry((r.subset, r.interval.tag.clone()))
                .or_default()
                .push(r.accuracy);
        }
    }
    groups
        .into_iter()
        .map(|((subset, interval), v)| {
            let (mean, sd) = mean_sd(&v, kind).unwrap_or((f64::NAN, f64::NAN));
            AggregateRow {
                subset,
                interval,
                n_runs: v.len(),
                mean,
                sd,
                cell: format_cell(mean, sd),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAggregateRow {
    pub band: BandSpec,
    pub n_runs: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Frequency-resolved accuracies averaged across runs, by band.
pub fn aggregate_bands(reports: &[DecodeReport], kind: SdKind) -> Vec<BandAggregateRow> {
    let mut rows: Vec<(BandSpec, Vec<f64>)> = Vec::new();
    for rep in reports {
        for r in &rep.bands {
            match rows.iter_mut().find(|(b, _)| *b == r.band) {
                Some((_, v)) => v.push(r.accuracy),
                None => rows.push((r.band, vec![r.accuracy])),
            }
        }
    }
    rows.sort_by(|a, b| a.0.lo_hz.total_cmp(&b.0.lo_hz));
    rows.into_iter()
        .map(|(band, v)| {
            let (mean, sd) = mean_sd(&v, kind).unwrap_or((f64::NAN, f64::NAN));
            BandAggregateRow {
                band,
                n_runs: v.len(),
                mean,
                sd,
            }
        })
        .collect()
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("subset,interval,n_runs,mean,sd,cell\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},\"{}\"", r.subset.tag(), r.interval, r.n_runs, r.mean, r.sd, r.cell);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells() {
        assert_eq!(summarize(&[0.6, 0.64, 0.62], SdKind::Sample), "0.620 (0.020)");
        assert_eq!(summarize(&[0.7], SdKind::Sample), "0.700 (0.000)");
        assert_eq!(summarize(&[], SdKind::Sample), "-");
        let (_, pop) = mean_sd(&[0.6, 0.64, 0.62], SdKind::Population).unwrap();
        assert!((pop - (0.0008f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(format_cell(0.621, 0.057), "0.621 (0.057)");
    }
}
