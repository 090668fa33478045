//! Tabular outputs: the evaluation report and the detection summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use perioscope_core::validation::{EvalReport, EvalRow};
use serde::Serialize;

use crate::io::PeriodicityRecord;

/// Trims float noise such as `10.000000000000002`.
fn num(x: f64) -> String {
    format!("{}", (x * 1e6).round() / 1e6)
}

fn rate(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Serialize)]
struct RowJson {
    noise_pct: f64,
    planted: usize,
    found: usize,
    false_negatives: usize,
    false_positives: usize,
    correctly_characterized: usize,
    subperiodic_planted: usize,
    found_rate: f64,
    false_negative_rate: f64,
    false_positive_rate: f64,
    characterization_accuracy: f64,
    fn_by_period_length: BTreeMap<usize, usize>,
    fn_by_repetitions: BTreeMap<usize, usize>,
}

impl From<&EvalRow> for RowJson {
    fn from(r: &EvalRow) -> Self {
        Self {
            noise_pct: (r.noise * 100.0 * 1e6).round() / 1e6,
            planted: r.planted,
            found: r.found,
            false_negatives: r.false_negatives(),
            false_positives: r.false_positives,
            correctly_characterized: r.correctly_characterized,
            subperiodic_planted: r.subperiodic_planted,
            found_rate: r.found_rate(),
            false_negative_rate: r.false_negative_rate(),
            false_positive_rate: r.false_positive_rate(),
            characterization_accuracy: r.characterization_accuracy(),
            fn_by_period_length: r.false_negatives_by_period().collect(),
            fn_by_repetitions: r.false_negatives_by_repetitions().collect(),
        }
    }
}

pub fn eval_report_json(report: &EvalReport) -> String {
    #[derive(Serialize)]
    struct Doc {
        rows: Vec<RowJson>,
    }
    let doc = Doc {
        rows: report.rows.iter().map(RowJson::from).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn counts_csv(header: &str, counts: impl Iterator<Item = (usize, usize)>) -> String {
    let mut s = format!("{header}\n");
    for (k, v) in counts {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// `(file name, contents)` of the evaluation outputs. The false-negative
/// tables describe the first noise level, normally the noiseless run.
pub fn eval_tables(report: &EvalReport) -> Vec<(&'static str, String)> {
    let first = report.rows.first().cloned().unwrap_or_else(|| EvalRow::new(0.0));
    let mut sweep = String::from("pct,found_rate,fp_rate,char_accuracy\n");
    for r in &report.rows {
        let _ = writeln!(
            sweep,
            "{},{},{},{}",
            num(r.noise * 100.0),
            rate(r.found_rate()),
            rate(r.false_positive_rate()),
            rate(r.characterization_accuracy())
        );
    }
    vec![
        ("report.json", eval_report_json(report)),
        ("fn_by_period_length.csv", counts_csv("period,count", first.false_negatives_by_period())),
        ("fn_by_repetitions.csv", counts_csv("repetitions,count", first.false_negatives_by_repetitions())),
        ("noise_sweep.csv", sweep),
    ]
}

/// Aggregates over a set of detections.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DetectSummary {
    pub series_analyzed: usize,
    pub series_periodic: usize,
    pub periodicities: usize,
    /// Distinct pattern values (paths or states) per periodicity.
    pub distinct_values: BTreeMap<usize, usize>,
    pub repetitions: BTreeMap<usize, usize>,
    pub pattern_lengths: BTreeMap<usize, usize>,
    pub durations: BTreeMap<u64, usize>,
    /// Paris attribution outcome counts, when attribution ran.
    pub attribution: BTreeMap<String, usize>,
}

impl DetectSummary {
    pub fn new(series_analyzed: usize, records: &[PeriodicityRecord]) -> Self {
        let mut s = Self {
            series_analyzed,
            periodicities: records.len(),
            ..Self::default()
        };
        let mut periodic: Vec<&str> = records.iter().map(|r| r.series_id.as_str()).collect();
        periodic.sort_unstable();
        periodic.dedup();
        s.series_periodic = periodic.len();
        for r in records {
            let distinct = r.pattern_states.unwrap_or_else(|| {
                let mut v: Vec<&Option<String>> = r.pattern.iter().collect();
                v.sort();
                v.dedup();
                v.len()
            });
            *s.distinct_values.entry(distinct).or_default() += 1;
            *s.repetitions.entry(r.repetitions).or_default() += 1;
            *s.pattern_lengths.entry(r.period_slots).or_default() += 1;
            *s.durations.entry((r.end_ts - r.start_ts) as u64).or_default() += 1;
            if let Some(a) = &r.paris_attribution {
                *s.attribution.entry(a.clone()).or_default() += 1;
            }
        }
        s
    }

    pub fn tables(&self) -> Vec<(&'static str, String)> {
        let dist = |header: &str, m: &BTreeMap<usize, usize>| counts_csv(header, m.iter().map(|(&k, &v)| (k, v)));
        let mut durations = String::from("duration_seconds,count\n");
        for (k, v) in &self.durations {
            let _ = writeln!(durations, "{k},{v}");
        }
        let mut out = vec![
            (
                "summary.csv",
                format!(
                    "series_analyzed,series_periodic,periodicities\n{},{},{}\n",
                    self.series_analyzed, self.series_periodic, self.periodicities
                ),
            ),
            ("distinct_values.csv", dist("distinct_values,count", &self.distinct_values)),
            ("repetitions.csv", dist("repetitions,count", &self.repetitions)),
            ("pattern_lengths.csv", dist("period_slots,count", &self.pattern_lengths)),
            ("durations.csv", durations),
        ];
        if !self.attribution.is_empty() {
            let mut a = String::from("attribution,count\n");
            for (k, v) in &self.attribution {
                let _ = writeln!(a, "{k},{v}");
            }
            out.push(("attribution.csv", a));
        }
        out
    }
}

pub fn write_tables(dir: &Path, tables: &[(&str, String)]) -> std::io::Result<()> {
    for (name, contents) in tables {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
