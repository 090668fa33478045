//! Command-line driver. Exit codes: 0 success, 1 runtime failure, 2 usage
//! or configuration error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand};
use perioscope_core::bgp::{build_state_series, peers_of, synth_beacon, Flapping, DEFAULT_STATE_THRESHOLD};
use perioscope_core::traceroute::{group_pairs, pair_stats};
use perioscope_core::validation::{generate_series, EvalConfig, GeneratorConfig, SeriesTruth};
use perioscope_core::{DetectorConfig, SymbolSeries};
use rayon::prelude::*;
use serde::Deserialize;

use crate::io::{self, Malformed, PeriodicityRecord};
use crate::pipeline;
use crate::report::{eval_tables, write_tables, DetectSummary};

#[derive(Parser, Debug)]
#[command(name = "perioscope", version, about = "Find periodic patterns in symbolic time series")]
pub struct Cli {
    /// JSON file holding values for any of the flags; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Write a synthetic corpus (series.jsonl, truth.jsonl) to --output.
    Generate,
    /// Detect periodicities in a series file.
    Detect,
    /// Score the detector against ground truth, optionally under noise.
    Evaluate,
    /// Build per-pair series from traceroutes and detect periodicities.
    IngestTraceroute,
    /// Build the state series of one prefix from BGP updates and detect
    /// periodicities under the state match.
    IngestBgp,
    /// Write a synthetic BGP beacon update stream.
    Beacon,
}

/// Every flag, also accepted as a key of the `--config` file.
#[derive(Args, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Input file, or for evaluate a directory holding series.jsonl and truth.jsonl.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory (a file for beacon).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seconds per slot.
    #[arg(long, global = true)]
    pub step: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Noise levels in percent of planted slots, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub noise: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub noise_seed: Option<u64>,
    /// Worker threads; 0 or absent uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Absolute floor on normalized autocorrelation peaks.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Peak significance in standard deviations over chance.
    #[arg(long, global = true)]
    pub peak_z: Option<f64>,
    /// Relative height tolerance of a peak cluster.
    #[arg(long, global = true)]
    pub eps_y: Option<f64>,
    /// Largest gap coefficient of variation of a regular cluster.
    #[arg(long, global = true)]
    pub gap_cv: Option<f64>,
    #[arg(long, global = true)]
    pub min_reps: Option<usize>,
    /// Smallest autocorrelation window as a fraction of the series; 1 disables windows.
    #[arg(long, global = true)]
    pub min_window_fraction: Option<f64>,
    /// Share of peers that must agree for two BGP states to match.
    #[arg(long, global = true)]
    pub state_threshold: Option<f64>,
    /// Run the Paris-id attribution test on traceroute periodicities.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    pub paris: bool,
    /// Input is in the measurement-archive traceroute result format.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    pub atlas: bool,
    #[arg(long, global = true)]
    pub prefix: Option<String>,
    /// Periodicity records to score instead of running the detector.
    #[arg(long, global = true)]
    pub detections: Option<PathBuf>,
    /// Window start (unix seconds) for ingest commands and beacon.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub start: Option<i64>,
    /// Window end (exclusive) for ingest commands.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub end: Option<i64>,
    #[arg(long, global = true)]
    pub series: Option<usize>,
    #[arg(long, global = true)]
    pub slots: Option<usize>,
    #[arg(long, global = true)]
    pub alphabet: Option<usize>,
    #[arg(long, global = true)]
    pub period_min: Option<usize>,
    #[arg(long, global = true)]
    pub period_max: Option<usize>,
    #[arg(long, global = true)]
    pub reps_min: Option<usize>,
    #[arg(long, global = true)]
    pub reps_max: Option<usize>,
    #[arg(long, global = true)]
    pub peers: Option<usize>,
    #[arg(long, global = true)]
    pub hours: Option<u64>,
    /// Share of beacon peers flapping every second.
    #[arg(long, global = true)]
    pub flap_fraction: Option<f64>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*; $($flag:ident),*) => {
        Options {
            $($f: $a.$f.or($b.$f),)*
            $($flag: $a.$flag || $b.$flag,)*
        }
    };
}

impl Options {
    /// Values of `self` where set, otherwise those of `file`.
    pub fn or(self, file: Options) -> Options {
        prefer!(self, file;
            input, output, step, seed, noise, noise_seed, workers, theta, peak_z, eps_y, gap_cv, min_reps,
            min_window_fraction, state_threshold, prefix, detections, start, end, series, slots, alphabet,
            period_min, period_max, reps_min, reps_max, peers, hours, flap_fraction;
            paris, atlas)
    }

    pub fn detector(&self) -> Result<DetectorConfig, Failure> {
        let d = DetectorConfig::default();
        let cfg = DetectorConfig {
            peak_threshold: self.theta.unwrap_or(d.peak_threshold),
            peak_z: self.peak_z.unwrap_or(d.peak_z),
            cluster_y_tolerance: self.eps_y.unwrap_or(d.cluster_y_tolerance),
            gap_cv_threshold: self.gap_cv.unwrap_or(d.gap_cv_threshold),
            min_repetitions: self.min_reps.unwrap_or(d.min_repetitions),
            min_window_fraction: self.min_window_fraction.unwrap_or(d.min_window_fraction),
            ..d
        };
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }

    pub fn generator(&self) -> Result<GeneratorConfig, Failure> {
        let d = GeneratorConfig::default();
        let cfg = GeneratorConfig {
            series_count: self.series.unwrap_or(d.series_count),
            slots_per_series: self.slots.unwrap_or(d.slots_per_series),
            alphabet_size: self.alphabet.unwrap_or(d.alphabet_size),
            period_min: self.period_min.unwrap_or(d.period_min),
            period_max: self.period_max.unwrap_or(d.period_max),
            repetitions_min: self.reps_min.unwrap_or(d.repetitions_min),
            repetitions_max: self.reps_max.unwrap_or(d.repetitions_max),
            step: self.step.unwrap_or(d.step),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate().map_err(Failure::usage)?;
        Ok(cfg)
    }

    fn noise_levels(&self) -> Result<Vec<f64>, Failure> {
        let levels = self.noise.clone().unwrap_or_else(|| vec![0.0]);
        if let Some(bad) = levels.iter().find(|&&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Failure::usage(format!("noise level {bad} must be a non-negative percentage")));
        }
        Ok(levels.iter().map(|p| p / 100.0).collect())
    }

    fn input(&self) -> Result<&Path, Failure> {
        self.input.as_deref().ok_or_else(|| Failure::usage("--input is required"))
    }

    fn output(&self) -> Result<&Path, Failure> {
        self.output.as_deref().ok_or_else(|| Failure::usage("--output is required"))
    }

    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        pipeline::pool(self.workers).map_err(Failure::Runtime)
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(anyhow!("{e}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let opts = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Usage)?;
            let file: Options = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(Failure::Usage)?;
            cli.opts.or(file)
        }
        None => cli.opts,
    };
    match cli.command {
        Command::Generate => cmd_generate(&opts),
        Command::Detect => cmd_detect(&opts),
        Command::Evaluate => cmd_evaluate(&opts),
        Command::IngestTraceroute => cmd_ingest_traceroute(&opts),
        Command::IngestBgp => cmd_ingest_bgp(&opts),
        Command::Beacon => cmd_beacon(&opts),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn out_dir(opts: &Options) -> Result<&Path, Failure> {
    let dir = opts.output()?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn report_malformed(what: &str, m: &Malformed) {
    if m.count > 0 {
        eprintln!("skipped {} malformed {what} line(s)", m.count);
        for s in &m.samples {
            eprintln!("  {s}");
        }
    }
}

fn write_detections(dir: &Path, analyzed: usize, records: &[PeriodicityRecord]) -> anyhow::Result<DetectSummary> {
    io::write_periodicities(create(&dir.join("periodicities.jsonl"))?, records)?;
    let summary = DetectSummary::new(analyzed, records);
    write_tables(dir, &summary.tables())?;
    println!(
        "series analyzed {}, with periodicities {}, periodicities {}",
        summary.series_analyzed, summary.series_periodic, summary.periodicities
    );
    Ok(summary)
}

fn cmd_generate(opts: &Options) -> Result<(), Failure> {
    let cfg = opts.generator()?;
    let dir = out_dir(opts)?;
    let pool = opts.pool()?;
    let corpus: Vec<_> = pool.install(|| {
        (0..cfg.series_count)
            .into_par_iter()
            .map(|i| generate_series(&cfg, i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let (series, truth): (Vec<SymbolSeries>, Vec<SeriesTruth>) = corpus.into_iter().unzip();
    let truth_records: Vec<_> = series.iter().zip(&truth).map(|(s, t)| io::TruthRecord::new(s, t)).collect();
    io::write_series(create(&dir.join("series.jsonl"))?, &series)?;
    io::write_truth(create(&dir.join("truth.jsonl"))?, &truth_records)?;
    let planted: usize = truth.iter().map(|t| t.planted.len()).sum();
    println!("series {}, planted periodicities {planted}", series.len());
    Ok(())
}

fn cmd_detect(opts: &Options) -> Result<(), Failure> {
    let detector = opts.detector()?;
    let input = opts.input()?;
    let dir = out_dir(opts)?;
    let series = io::read_series(open(input)?).with_context(|| format!("reading {}", input.display()))?;
    let records = pipeline::detect_all(&opts.pool()?, &series, &detector)?;
    write_detections(dir, series.len(), &records)?;
    Ok(())
}

/// Series and truth of a corpus directory, paired by series id in series
/// file order.
pub fn read_corpus(dir: &Path) -> anyhow::Result<Vec<(SymbolSeries, SeriesTruth)>> {
    let series = io::read_series(open(&dir.join("series.jsonl"))?).context("reading series.jsonl")?;
    let mut truth: std::collections::BTreeMap<String, io::TruthRecord> = io::read_truth(open(&dir.join("truth.jsonl"))?)
        .context("reading truth.jsonl")?
        .into_iter()
        .map(|t| (t.series_id.clone(), t))
        .collect();
    if truth.len() != series.len() {
        bail!("truth covers {} series but the series file holds {}", truth.len(), series.len());
    }
    series
        .into_iter()
        .map(|s| {
            let t = truth
                .remove(s.series_id())
                .ok_or_else(|| anyhow!("no ground truth for series {}", s.series_id()))?;
            let t = t.to_truth(&s).map_err(|e| anyhow!(e))?;
            Ok((s, t))
        })
        .collect()
}

fn cmd_evaluate(opts: &Options) -> Result<(), Failure> {
    let noise_levels = opts.noise_levels()?;
    let config = EvalConfig {
        detector: opts.detector()?,
        noise_levels,
        noise_seed: opts.noise_seed.unwrap_or(EvalConfig::default().noise_seed),
        generator: match opts.input {
            Some(_) => GeneratorConfig::default(),
            None => opts.generator()?,
        },
        ..EvalConfig::default()
    };
    if opts.detections.is_some() && (opts.input.is_none() || config.noise_levels.iter().any(|&n| n != 0.0)) {
        return Err(Failure::usage("--detections needs --input and no noise"));
    }
    let dir = out_dir(opts)?;
    let pool = opts.pool()?;
    let report = match &opts.input {
        None => pipeline::evaluate_generated(&pool, &config)?,
        Some(input) => {
            let corpus = read_corpus(input)?;
            match &opts.detections {
                None => pipeline::evaluate_corpus(&pool, &config, &corpus)?,
                Some(path) => {
                    let records = io::read_periodicities(open(path)?).with_context(|| format!("reading {}", path.display()))?;
                    let index: std::collections::BTreeMap<&str, usize> =
                        corpus.iter().enumerate().map(|(i, (s, _))| (s.series_id(), i)).collect();
                    let mut grouped: Vec<Vec<&PeriodicityRecord>> = vec![Vec::new(); corpus.len()];
                    for r in &records {
                        let i = index
                            .get(r.series_id.as_str())
                            .ok_or_else(|| anyhow!("detection for unknown series {}", r.series_id))?;
                        grouped[*i].push(r);
                    }
                    pipeline::score_detections(&config, &corpus, &grouped)
                }
            }
        }
    };
    write_tables(dir, &eval_tables(&report))?;
    for r in &report.rows {
        println!(
            "noise {}%: planted {}, found {:.4}, false positives {:.4}, characterization {:.4}",
            (r.noise * 1e8).round() / 1e6,
            r.planted,
            r.found_rate(),
            r.false_positive_rate(),
            r.characterization_accuracy()
        );
    }
    Ok(())
}

/// `[start, end)` covering every timestamp, aligned to the step.
fn window(opts: &Options, ts: impl Iterator<Item = i64> + Clone, step: u64) -> Result<(i64, i64), Failure> {
    let step = step as i64;
    let start = match opts.start {
        Some(s) => s,
        None => ts.clone().min().map_or(0, |t| t - t.rem_euclid(step)),
    };
    let end = match opts.end {
        Some(e) => e,
        None => ts.max().map_or(start + step, |t| t - t.rem_euclid(step) + step),
    };
    if end <= start {
        return Err(Failure::usage(format!("empty window [{start}, {end})")));
    }
    Ok((start, end))
}

fn step_of(opts: &Options, default: u64) -> Result<u64, Failure> {
    match opts.step.unwrap_or(default) {
        0 => Err(Failure::usage("--step must be positive")),
        s => Ok(s),
    }
}

fn cmd_ingest_traceroute(opts: &Options) -> Result<(), Failure> {
    let detector = opts.detector()?;
    let step = step_of(opts, 900)?;
    let input = opts.input()?;
    let dir = out_dir(opts)?;
    let mut malformed = Malformed::default();
    let records = if opts.atlas {
        io::read_atlas(open(input)?, &mut malformed)
    } else {
        io::read_traceroutes(open(input)?, &mut malformed)
    }
    .with_context(|| format!("reading {}", input.display()))?;
    report_malformed("traceroute", &malformed);
    let (start, end) = window(opts, records.iter().map(|r| r.ts), step)?;
    let pairs = group_pairs(&records, start, end, step)?;
    let out_of_window: usize = pairs.iter().map(|p| p.report.dropped).sum();
    if out_of_window > 0 {
        eprintln!("dropped {out_of_window} traceroute(s) outside [{start}, {end})");
    }
    let periodicities = pipeline::detect_pairs(&opts.pool()?, &pairs, &detector, opts.paris)?;

    let mut stats = String::from("series_id,distinct_paths,occurrence_std_dev\n");
    for p in &pairs {
        let s = pair_stats(&p.series);
        stats.push_str(&format!("{},{},{:.6}\n", p.series.series_id(), s.distinct_paths, s.occurrence_std_dev));
    }
    std::fs::write(dir.join("pair_paths.csv"), stats)?;
    write_detections(dir, pairs.len(), &periodicities)?;
    Ok(())
}

fn cmd_ingest_bgp(opts: &Options) -> Result<(), Failure> {
    let detector = opts.detector()?;
    let step = step_of(opts, 1)?;
    let threshold = opts.state_threshold.unwrap_or(DEFAULT_STATE_THRESHOLD);
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Failure::usage(format!("state threshold {threshold} is outside (0, 1]")));
    }
    let prefix = opts.prefix.as_deref().ok_or_else(|| Failure::usage("--prefix is required"))?;
    let input = opts.input()?;
    let dir = out_dir(opts)?;
    let mut malformed = Malformed::default();
    let updates = io::read_bgp_updates(open(input)?, Some(prefix), &mut malformed)
        .with_context(|| format!("reading {}", input.display()))?;
    report_malformed("BGP", &malformed);
    let peers = peers_of(&updates);
    let (start, end) = window(opts, updates.iter().map(|u| u.ts), step)?;
    let states = build_state_series(prefix, &updates, &peers, start, end, step)?;
    if states.report.out_of_window > 0 {
        eprintln!("dropped {} update(s) outside [{start}, {end})", states.report.out_of_window);
    }
    let series = states.series.clone().with_series_id(prefix);
    let states = perioscope_core::bgp::InternetStateSeries { series, ..states };
    let records = pipeline::detect_states(&states, &detector, threshold)?;
    write_detections(dir, 1, &records)?;
    Ok(())
}

fn cmd_beacon(opts: &Options) -> Result<(), Failure> {
    let path = opts.output()?;
    let peers = opts.peers.unwrap_or(100);
    let hours = opts.hours.unwrap_or(24);
    let fraction = opts.flap_fraction.unwrap_or(0.0);
    if peers == 0 || hours == 0 || !(0.0..=1.0).contains(&fraction) {
        return Err(Failure::usage("beacon needs peers > 0, hours > 0 and a flap fraction in [0, 1]"));
    }
    let names: Vec<String> = (0..peers).map(|i| format!("peer-{i:03}")).collect();
    let flapping = (fraction > 0.0).then(|| Flapping {
        fraction,
        seed: opts.seed.unwrap_or(1),
    });
    let prefix = opts.prefix.as_deref().unwrap_or("84.205.64.0/24");
    let updates = synth_beacon(prefix, opts.start.unwrap_or(0), hours as i64 * 3600, &names, flapping);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = create(path)?;
    io::write_bgp_updates(&mut w, &updates)?;
    w.flush()?;
    println!("updates {}", updates.len());
    Ok(())
}
