//! The `fbcsp` command line: `synth`, `decode` and `report`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cleaning::{RejectionScope, NOISY_CHANNEL_K, REJECT_PRE_MS, REJECT_THRESHOLD_UV};
use crate::csp::CSP_FILTERS_PER_END;
use crate::dataset::{load_dataset, save_dataset, Interval};
use crate::dsp::{build_filter_bank, BandSpec, BandSubset, Direction, FilterBankSpec, FILTER_ORDER, HIGHPASS_CUTOFF_HZ, TARGET_FS_HZ};
use crate::error::{Error, Result};
use crate::pipeline::{
    self, aggregate, aggregate_bands, aggregate_csv, band_covariances, bands_csv, bands_tsv, decode_band, decode_fbcsp,
    fbcsp_csv, make_folds_with, preprocess, table_row, DatasetSummary, DecodeConfig, DecodeReport, Experiment,
    FoldScheme, PreprocessConfig, RejectionConfig, RunSettings, SdKind, WindowSpec, DEFAULT_FOLDS,
};
use crate::rlda::Shrinkage;
use crate::stats::{PValueEstimator, PermutationConfig, Resampling, PERMUTATIONS};
use crate::synth::{self, ArtifactConfig, Mixing, SynthConfig};

pub const REPORT_FILE: &str = "report.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

#[derive(Debug, Parser)]
#[command(name = "fbcsp", version, about = "Filter-bank CSP decoding of two-class EEG trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with a planted band-power effect.
    Synth(SynthArgs),
    /// Preprocess, cross-validate and test a dataset.
    Decode(RunConfig),
    /// Aggregate decode reports into mean (sd) tables.
    Report(ReportArgs),
}

fn pair<T: std::str::FromStr>(s: &str) -> std::result::Result<(T, T), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'a,b', got '{s}'"));
    }
    let p = |x: &str| x.trim().parse::<T>().map_err(|_| format!("cannot parse '{x}'"));
    Ok((p(parts[0])?, p(parts[1])?))
}

fn parse_trials(s: &str) -> std::result::Result<(usize, usize), String> {
    pair(s)
}

fn parse_f64_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    pair(s)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    pub channels: usize,
    /// Trials of class 0 and class 1, e.g. 432,288 for a 60/40 split.
    #[arg(long, default_value = "200,200", value_parser = parse_trials)]
    pub trials: (usize, usize),
    /// Planted band in Hz.
    #[arg(long, default_value = "10,12", value_parser = parse_f64_pair, allow_hyphen_values = true)]
    pub band: (f64, f64),
    /// Class-1 over class-0 source power in the planted band (>= 1).
    #[arg(long, default_value_t = 4.0)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500.0)]
    pub fs: f64,
    /// Trial span in ms around the event.
    #[arg(long, default_value = "-1000,2000", value_parser = parse_f64_pair, allow_hyphen_values = true)]
    pub interval: (f64, f64),
    /// Decoding window in ms; sets the source period and the oracle.
    #[arg(long, default_value = "0,2000", value_parser = parse_f64_pair, allow_hyphen_values = true)]
    pub window: (f64, f64),
    #[arg(long, default_value_t = 6)]
    pub sources: usize,
    /// Sensor-level standard deviation of a unit source in uV.
    #[arg(long, default_value_t = 10.0)]
    pub source_uv: f64,
    /// White sensor noise standard deviation in uV.
    #[arg(long, default_value_t = 5.0)]
    pub noise_uv: f64,
    /// Fraction of trials receiving a square artifact pulse.
    #[arg(long, default_value_t = 0.0)]
    pub artifact_fraction: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub artifact_uv: f64,
    #[arg(long, default_value_t = 50.0)]
    pub artifact_ms: f64,
    /// Output directory for the dataset and ground truth.
    #[arg(long, default_value = "synth-data")]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn to_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            n_channels: self.channels,
            n_trials_per_class: [self.trials.0, self.trials.1],
            fs_hz: self.fs,
            interval: Interval::new(self.interval.0, self.interval.1)?,
            window: Interval::new(self.window.0, self.window.1)?,
            planted_band: BandSpec::new(self.band.0, self.band.1),
            variance_ratio: self.ratio,
            n_sources: self.sources,
            mixing: Mixing::RandomOrthonormal,
            source_amplitude_uv: self.source_uv,
            sensor_noise_uv: self.noise_uv,
            artifacts: (self.artifact_fraction > 0.0).then_some(ArtifactConfig {
                fraction: self.artifact_fraction,
                amplitude_uv: self.artifact_uv,
                duration_ms: self.artifact_ms,
            }),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    All,
    Below20,
    Above60,
}

impl From<SubsetArg> for BandSubset {
    fn from(s: SubsetArg) -> Self {
        match s {
            SubsetArg::All => BandSubset::All,
            SubsetArg::Below20 => BandSubset::Below20,
            SubsetArg::Above60 => BandSubset::Above60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FoldArg {
    Stratified,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SdArg {
    Sample,
    Population,
}

impl From<SdArg> for SdKind {
    fn from(s: SdArg) -> Self {
        match s {
            SdArg::Sample => SdKind::Sample,
            SdArg::Population => SdKind::Population,
        }
    }
}

/// Settings of one `decode` run.
#[derive(Debug, Args)]
pub struct RunConfig {
    /// Dataset directory or manifest file.
    pub data: PathBuf,
    /// Band subsets for FBCSP; repeat or comma-separate. Default: all three.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub subset: Vec<SubsetArg>,
    /// Decoding window: full | late | intermediate, or 'start,end' in ms.
    #[arg(long, default_value = "full", allow_hyphen_values = true)]
    pub interval: String,
    /// Experiment whose presets resolve named intervals (1 or 2).
    #[arg(long, default_value = "1")]
    pub experiment: String,
    /// Cross-validation folds.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "stratified")]
    pub folds: FoldArg,
    /// CSP filters kept from each end of the spectrum.
    #[arg(long, default_value_t = CSP_FILTERS_PER_END)]
    pub m: usize,
    /// Randomization-test resamples; 0 skips the test.
    #[arg(long, default_value_t = PERMUTATIONS)]
    pub perms: usize,
    /// Draw resampled predictions without replacement.
    #[arg(long)]
    pub without_replacement: bool,
    /// Report r/n instead of (r+1)/(n+1).
    #[arg(long)]
    pub raw_fraction: bool,
    /// Seed for folds and resampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Also decode every band of the filter bank on its own.
    #[arg(long)]
    pub bands_sweep: bool,
    /// Target sampling rate in Hz; 0 disables downsampling.
    #[arg(long, default_value_t = TARGET_FS_HZ)]
    pub target_fs: f64,
    /// High-pass cut-off in Hz; 0 disables it.
    #[arg(long, default_value_t = HIGHPASS_CUTOFF_HZ)]
    pub highpass: f64,
    /// Butterworth order of the high-pass and band-pass filters.
    #[arg(long, default_value_t = FILTER_ORDER)]
    pub order: usize,
    /// Filter forward and backward instead of causally.
    #[arg(long)]
    pub zero_phase: bool,
    /// Peak-to-peak rejection threshold in uV.
    #[arg(long, default_value_t = REJECT_THRESHOLD_UV)]
    pub threshold_uv: f64,
    /// Rejection window starts this many ms before the decoding window.
    #[arg(long, default_value_t = REJECT_PRE_MS)]
    pub pre_ms: f64,
    /// Measure peak-to-peak across all channels jointly.
    #[arg(long)]
    pub global_ptp: bool,
    /// Disable trial rejection.
    #[arg(long)]
    pub no_reject: bool,
    /// Robust z threshold for automatic noisy-channel removal.
    #[arg(long, default_value_t = NOISY_CHANNEL_K)]
    pub noisy_k: f64,
    /// Disable automatic noisy-channel removal.
    #[arg(long)]
    pub no_noisy: bool,
    /// Channels to drop by name; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    /// Skip common-average re-referencing.
    #[arg(long)]
    pub no_car: bool,
    /// Fixed rLDA shrinkage in [0, 1] instead of the analytic estimate.
    #[arg(long)]
    pub shrinkage: Option<f64>,
    #[arg(long, value_enum, default_value = "sample")]
    pub sd: SdArg,
    /// Output directory.
    #[arg(long, default_value = "fbcsp-out")]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn subsets(&self) -> Vec<BandSubset> {
        if self.subset.is_empty() {
            return BandSubset::ALL.to_vec();
        }
        let mut v: Vec<BandSubset> = self.subset.iter().map(|&s| s.into()).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn window(&self) -> Result<(Experiment, WindowSpec)> {
        let exp: Experiment = self.experiment.parse()?;
        Ok((exp, WindowSpec::parse(&self.interval, exp)?))
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            target_fs_hz: (self.target_fs > 0.0).then_some(self.target_fs),
            highpass_hz: (self.highpass > 0.0).then_some(self.highpass),
            highpass_order: self.order,
            noisy_channel_k: (!self.no_noisy).then_some(self.noisy_k),
            exclude_channels: self.exclude.clone(),
            rejection: (!self.no_reject).then_some(RejectionConfig {
                threshold_uv: self.threshold_uv,
                pre_ms: self.pre_ms,
                scope: if self.global_ptp {
                    RejectionScope::Global
                } else {
                    RejectionScope::AnyChannel
                },
            }),
            common_average: !self.no_car,
        }
    }

    pub fn permutation_config(&self) -> Option<PermutationConfig> {
        (self.perms > 0).then_some(PermutationConfig {
            n_resamples: self.perms,
            seed: self.seed,
            resampling: if self.without_replacement {
                Resampling::WithoutReplacement
            } else {
                Resampling::WithReplacement
            },
            estimator: if self.raw_fraction {
                PValueEstimator::RawFraction
            } else {
                PValueEstimator::AddOne
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files, or directories searched for report.json.
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "sample")]
    pub sd: SdArg,
    /// Write the aggregated table as CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = args.to_config()?;
    let (trials, truth) = synth::generate(&cfg)?;
    let manifest = save_dataset(&trials, &args.out)?;
    write(&args.out.join(GROUND_TRUTH_FILE), &to_json(&truth)?)?;
    println!(
        "wrote {} trials x {} channels x {} samples to {}",
        trials.n_trials(),
        trials.n_channels(),
        trials.n_samples(),
        manifest.display()
    );
    println!(
        "oracle accuracy {:.3} +/- {:.3}; decode with --interval {},{}",
        truth.oracle.accuracy, truth.oracle.stderr, cfg.window.start_ms, cfg.window.end_ms
    );
    Ok(())
}

/// Runs the whole decoding pipeline and returns the report without
/// writing anything.
pub fn run_decode(cfg: &RunConfig) -> Result<DecodeReport> {
    if let Some(g) = cfg.shrinkage {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::Config(format!("shrinkage must be in [0, 1], got {g}")));
        }
    }
    let (experiment, window) = cfg.window()?;
    let raw = load_dataset(&cfg.data)?;
    let pcfg = cfg.preprocess_config();
    let (trials, cleaning) = preprocess(&raw, &pcfg, window.window)?;
    let scheme = match cfg.folds {
        FoldArg::Stratified => FoldScheme::Stratified,
        FoldArg::Blocked => FoldScheme::Blocked,
    };
    let plan = make_folds_with(&trials, cfg.k, cfg.seed, scheme)?;
    let dcfg = DecodeConfig {
        window,
        m: cfg.m,
        filter_order: cfg.order,
        direction: if cfg.zero_phase {
            Direction::ZeroPhase
        } else {
            Direction::Causal
        },
        shrinkage: cfg.shrinkage.map_or(Shrinkage::Auto, Shrinkage::Fixed),
    };
    let subsets = cfg.subsets();
    let bank = build_filter_bank(trials.fs_hz(), &FilterBankSpec::default())?;
    let covs = bank
        .bands
        .iter()
        .filter(|b| cfg.bands_sweep || subsets.iter().any(|s| s.contains(b)))
        .map(|&b| band_covariances(&trials, b, &dcfg))
        .collect::<Result<Vec<_>>>()?;
    let perm = cfg.permutation_config();
    let mut fbcsp = Vec::new();
    for &subset in &subsets {
        let r = decode_fbcsp(&trials, &covs, subset, &plan, &dcfg)?;
        fbcsp.push(match &perm {
            Some(p) => r.with_significance(p)?,
            None => r,
        });
    }
    let bands = if cfg.bands_sweep {
        covs.iter()
            .map(|c| decode_band(&trials, c, &plan, &dcfg))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(DecodeReport {
        settings: RunSettings {
            seed: cfg.seed,
            k: cfg.k,
            m: cfg.m,
            fold_scheme: scheme,
            experiment,
            filter_order: dcfg.filter_order,
            direction: dcfg.direction,
            shrinkage: dcfg.shrinkage,
            preprocess: pcfg,
            permutation: perm,
        },
        dataset: DatasetSummary {
            n_trials: trials.n_trials(),
            n_channels: trials.n_channels(),
            fs_hz: trials.fs_hz(),
            class_counts: trials.class_counts(),
        },
        cleaning,
        fbcsp,
        bands,
    })
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

pub fn cmd_decode(cfg: &RunConfig) -> Result<()> {
    let report = thread_pool(cfg.jobs)?.install(|| run_decode(cfg))?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let sd = cfg.sd.into();
    write(&cfg.out.join(REPORT_FILE), &to_json(&report)?)?;
    write(&cfg.out.join("fbcsp.csv"), &fbcsp_csv(&report.fbcsp, sd))?;
    if !report.bands.is_empty() {
        write(&cfg.out.join("bands.csv"), &bands_csv(&report.bands))?;
        write(&cfg.out.join("bands.tsv"), &bands_tsv(&report.bands))?;
    }
    let c = &report.cleaning;
    println!(
        "{} trials, {} channels after cleaning ({} removed, {} trials rejected)",
        report.dataset.n_trials,
        report.dataset.n_channels,
        c.removed_channels.len(),
        c.rejected_trials.len()
    );
    for r in &report.fbcsp {
        println!("{}", table_row(r, sd));
    }
    if let Some(best) = report.bands.iter().max_by(|a, b| a.accuracy.total_cmp(&b.accuracy)) {
        println!("best band {} at {:.3}", best.band, best.accuracy);
    }
    println!("results in {}", cfg.out.display());
    Ok(())
}

fn collect_reports(path: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_file() {
        found.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_reports(&p, found)?;
        } else if p.file_name().is_some_and(|n| n == REPORT_FILE) {
            found.push(p);
        }
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    for p in &args.inputs {
        collect_reports(p, &mut files)?;
    }
    if files.is_empty() {
        return Err(Error::Config("no report files given or found".into()));
    }
    let reports = files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
            Ok(serde_json::from_str::<DecodeReport>(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let sd = args.sd.into();
    let rows = aggregate(&reports, sd);
    println!("{:<8} {:<12} {:>4}  mean (sd)", "subset", "interval", "runs");
    for r in &rows {
        println!("{:<8} {:<12} {:>4}  {}", r.subset.tag(), r.interval, r.n_runs, r.cell);
    }
    let bands = aggregate_bands(&reports, sd);
    if !bands.is_empty() {
        println!("\nband        mean (sd)");
        for b in &bands {
            println!("{:<11} {}", b.band.to_string(), pipeline::format_cell(b.mean, b.sd));
        }
    }
    if let Some(out) = &args.out {
        write(out, &aggregate_csv(&rows))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 1 usage, 2 data, 3 numerical.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
