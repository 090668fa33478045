//! Per-series fan-out on a bounded worker pool. Results come back in input
//! order, so the worker count never changes the output.

use perioscope_core::bgp::{detect_as_swap, detect_state_periodicity, InternetStateSeries, StateMatch};
use perioscope_core::detector::distinct_under;
use perioscope_core::traceroute::{paris_attribution, Attribution, PairSeries};
use perioscope_core::validation::{
    evaluate_series, score_at_levels, score_series, EvalConfig, EvalReport, SeriesTruth,
};
use perioscope_core::{detect, DetectorConfig, ExactMatch, SymbolSeries};
use rayon::prelude::*;

use crate::io::{AsSwapRecord, PeriodicityRecord};

pub fn pool(workers: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build()?)
}

fn records_for(series: &SymbolSeries, config: &DetectorConfig) -> perioscope_core::Result<Vec<PeriodicityRecord>> {
    Ok(detect(series, config, &ExactMatch)?
        .iter()
        .map(|p| {
            let mut r = PeriodicityRecord::new(series, p);
            r.pattern_states = Some(distinct_under(&p.pattern, &ExactMatch));
            r
        })
        .collect())
}

/// Exact-match detection over every series.
pub fn detect_all(
    pool: &rayon::ThreadPool,
    series: &[SymbolSeries],
    config: &DetectorConfig,
) -> perioscope_core::Result<Vec<PeriodicityRecord>> {
    let per: Vec<_> = pool.install(|| series.par_iter().map(|s| records_for(s, config)).collect());
    Ok(per.into_iter().collect::<Result<Vec<_>, _>>()?.concat())
}

/// Detection per traceroute pair; with `paris`, each record carries the
/// attribution outcome.
pub fn detect_pairs(
    pool: &rayon::ThreadPool,
    pairs: &[PairSeries],
    config: &DetectorConfig,
    paris: bool,
) -> perioscope_core::Result<Vec<PeriodicityRecord>> {
    let per: Vec<_> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                let found = detect(&pair.series, config, &ExactMatch)?;
                Ok(found
                    .iter()
                    .map(|p| {
                        let mut r = PeriodicityRecord::new(&pair.series, p);
                        r.pattern_states = Some(distinct_under(&p.pattern, &ExactMatch));
                        if paris {
                            annotate_paris(&mut r, pair, p);
                        }
                        r
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Vec<perioscope_core::Result<_>>>()
    });
    Ok(per.into_iter().collect::<Result<Vec<_>, _>>()?.concat())
}

fn annotate_paris(r: &mut PeriodicityRecord, pair: &PairSeries, p: &perioscope_core::Periodicity) {
    match paris_attribution(pair, p) {
        Attribution::Unknown => r.paris_attribution = Some("unknown".into()),
        Attribution::Evaluated {
            any_locked,
            all_locked,
            associations,
        } => {
            let label = match (any_locked, all_locked) {
                (_, true) => "all",
                (true, false) => "any",
                (false, false) => "none",
            };
            r.paris_attribution = Some(label.into());
            r.paris_associations = Some(
                associations
                    .into_iter()
                    .map(|(id, sym)| {
                        let raw = pair.series.table().lookup(sym).unwrap_or_default();
                        (id, String::from_utf8_lossy(raw).into_owned())
                    })
                    .collect(),
            );
        }
    }
}

/// State-match detection on one prefix, with distinct states and AS swaps
/// per periodicity.
pub fn detect_states(
    states: &InternetStateSeries,
    config: &DetectorConfig,
    threshold: f64,
) -> perioscope_core::Result<Vec<PeriodicityRecord>> {
    let op = StateMatch::new(states, threshold)?;
    let found = detect_state_periodicity(states, config, threshold)?;
    Ok(found
        .iter()
        .map(|p| {
            let mut r = PeriodicityRecord::new(&states.series, p);
            r.pattern_states = Some(distinct_under(&p.pattern, &op));
            r.as_swaps = Some(
                detect_as_swap(states, p)
                    .into_iter()
                    .map(|s| AsSwapRecord {
                        peer: s.peer,
                        low: s.low,
                        high: s.high,
                    })
                    .collect(),
            );
            r
        })
        .collect())
}

/// The full in-vitro experiment on a generated corpus.
pub fn evaluate_generated(pool: &rayon::ThreadPool, config: &EvalConfig) -> perioscope_core::Result<EvalReport> {
    config.generator.validate()?;
    config.detector.validate()?;
    let per: Vec<_> = pool.install(|| {
        (0..config.generator.series_count)
            .into_par_iter()
            .map(|i| evaluate_series(config, i))
            .collect()
    });
    let per = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::aggregate(&config.noise_levels, per.iter().map(Vec::as_slice)))
}

/// The experiment on series and truth read from files; series `i` gets the
/// noise seeds of index `i`.
pub fn evaluate_corpus(
    pool: &rayon::ThreadPool,
    config: &EvalConfig,
    corpus: &[(SymbolSeries, SeriesTruth)],
) -> perioscope_core::Result<EvalReport> {
    config.detector.validate()?;
    let per: Vec<_> = pool.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, (s, t))| score_at_levels(config, i, s, t))
            .collect()
    });
    let per = per.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::aggregate(&config.noise_levels, per.iter().map(Vec::as_slice)))
}

/// Scores given detections; `detections[i]` belongs to `corpus[i]`.
pub fn score_detections(
    config: &EvalConfig,
    corpus: &[(SymbolSeries, SeriesTruth)],
    detections: &[Vec<&PeriodicityRecord>],
) -> EvalReport {
    let per: Vec<Vec<_>> = corpus
        .iter()
        .zip(detections)
        .map(|((s, t), recs)| {
            let found: Vec<_> = recs.iter().map(|r| r.to_periodicity(s)).collect();
            vec![score_series(&found, &t.planted, config.overlap_threshold, &config.detector.tolerance)]
        })
        .collect();
    EvalReport::aggregate(&[0.0], per.iter().map(Vec::as_slice))
}
