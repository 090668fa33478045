//! The detection pipeline: autocorrelation, peak detection, peak
//! clustering, characterization, and harmonic suppression.
//!
//! All stages are generic over a [`MatchOperator`], the predicate deciding
//! whether two slot values coincide. Plain symbol equality is
//! [`ExactMatch`]; the BGP module supplies a relaxed operator over Internet
//! states.

mod acf;
mod characterize;
mod cluster;
mod harmonics;
mod peaks;

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

pub use acf::{autocorrelate, AcfProfile};
pub use characterize::{
    characterize, characterize_with, cyclic_period, hamming, has_approximate_subperiod, RunGate,
};
pub use cluster::{cluster_peaks, regularize_cluster, PeakCluster};
pub use harmonics::{resolve_overlaps, suppress_harmonics};
pub use peaks::{detect_peaks, detect_peaks_with, AcfBaseline, Peak};

use crate::error::Result;
use crate::model::{DetectorConfig, Periodicity, Slot, Symbol, SymbolSeries};

/// Binary match predicate over slot values.
///
/// Implementations must be symmetric. Missing slots never reach
/// [`matches`](MatchOperator::matches): [`slots_match`](MatchOperator::slots_match)
/// answers `false` for them.
pub trait MatchOperator {
    fn matches(&self, a: Symbol, b: Symbol) -> bool;

    fn slots_match(&self, a: Slot, b: Slot) -> bool {
        match (a.symbol(), b.symbol()) {
            (Some(x), Some(y)) => self.matches(x, y),
            _ => false,
        }
    }

    /// Number of positions `n` where `x(n)` matches `x(n + lag)`.
    fn lag_count(&self, slots: &[Slot], lag: usize) -> u32 {
        slots
            .iter()
            .zip(&slots[lag..])
            .filter(|(a, b)| self.slots_match(**a, **b))
            .count() as u32
    }

    /// For each symbol id below `symbols`, the fraction of present slots it
    /// matches. Large alphabets are estimated against an evenly spaced
    /// sample of slots.
    fn match_rates(&self, slots: &[Slot], symbols: usize) -> Vec<f64> {
        const MAX_REFERENCE: usize = 2048;
        let counts = symbol_counts(slots, symbols);
        let used: Vec<usize> = (0..symbols).filter(|&s| counts[s] > 0).collect();
        let present: usize = counts.iter().sum();
        let mut rates = vec![0.0; symbols];
        if present == 0 {
            return rates;
        }
        if used.len() <= MAX_REFERENCE {
            for &a in &used {
                let hits: usize = used
                    .iter()
                    .filter(|&&b| self.matches(Symbol::new(a as u32), Symbol::new(b as u32)))
                    .map(|&b| counts[b])
                    .sum();
                rates[a] = hits as f64 / present as f64;
            }
        } else {
            let stride = present.div_ceil(MAX_REFERENCE);
            let sample: Vec<Symbol> = slots
                .iter()
                .filter_map(|s| s.symbol())
                .step_by(stride)
                .collect();
            for &a in &used {
                let sa = Symbol::new(a as u32);
                let hits = sample.iter().filter(|&&b| self.matches(sa, b)).count();
                rates[a] = hits as f64 / sample.len() as f64;
            }
        }
        rates
    }
}

impl<T: MatchOperator + ?Sized> MatchOperator for &T {
    fn matches(&self, a: Symbol, b: Symbol) -> bool {
        (**self).matches(a, b)
    }

    fn slots_match(&self, a: Slot, b: Slot) -> bool {
        (**self).slots_match(a, b)
    }

    fn lag_count(&self, slots: &[Slot], lag: usize) -> u32 {
        (**self).lag_count(slots, lag)
    }

    fn match_rates(&self, slots: &[Slot], symbols: usize) -> Vec<f64> {
        (**self).match_rates(slots, symbols)
    }
}

pub(crate) fn symbol_counts(slots: &[Slot], symbols: usize) -> Vec<usize> {
    let mut counts = vec![0usize; symbols];
    for s in slots.iter().filter_map(|s| s.symbol()) {
        counts[s.index()] += 1;
    }
    counts
}

/// Number of distinct values in `pattern` under `op`, grouping each slot
/// with the first earlier representative it matches. Missing slots count as
/// one extra class.
pub fn distinct_under<M: MatchOperator + ?Sized>(pattern: &[Slot], op: &M) -> usize {
    let mut reps: Vec<Symbol> = Vec::new();
    let mut missing = false;
    for slot in pattern {
        match slot.symbol() {
            Some(s) => {
                if !reps.iter().any(|&r| op.matches(r, s)) {
                    reps.push(s);
                }
            }
            None => missing = true,
        }
    }
    reps.len() + usize::from(missing)
}

/// Windows shorter than this are not autocorrelated.
const MIN_WINDOW: usize = 16;

/// Clusters `peaks` and adds the candidate periods they propose.
fn propose(
    peaks: &[Peak],
    config: &DetectorConfig,
    candidates: &mut BTreeSet<usize>,
) -> Vec<PeakCluster> {
    let mut clusters = Vec::new();
    for cluster in cluster_peaks(peaks, config.cluster_y_tolerance) {
        let reg = regularize_cluster(
            &cluster,
            config.gap_cv_threshold,
            config.max_outlier_fraction,
        );
        match reg.candidate_period {
            Some(p) => {
                candidates.insert(p);
                let tallest = cluster
                    .peaks
                    .iter()
                    .max_by(|a, b| a.height.total_cmp(&b.height).then(b.lag.cmp(&a.lag)));
                candidates.extend(tallest.map(|t| t.lag));
            }
            None => candidates.extend(reg.lags()),
        }
        clusters.push(reg);
    }
    clusters
}

/// Symbol equality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExactMatch;

impl MatchOperator for ExactMatch {
    fn matches(&self, a: Symbol, b: Symbol) -> bool {
        a == b
    }

    fn lag_count(&self, slots: &[Slot], lag: usize) -> u32 {
        let missing = Slot::MISSING.bits();
        slots
            .iter()
            .zip(&slots[lag..])
            .map(|(a, b)| u32::from((a.bits() == b.bits()) & (a.bits() != missing)))
            .sum()
    }

    fn match_rates(&self, slots: &[Slot], symbols: usize) -> Vec<f64> {
        let counts = symbol_counts(slots, symbols);
        let present: usize = counts.iter().sum();
        counts
            .into_iter()
            .map(|c| {
                if present == 0 {
                    0.0
                } else {
                    c as f64 / present as f64
                }
            })
            .collect()
    }
}

/// Intermediate products of one [`detect`] run.
#[derive(Clone, Debug, Default)]
pub struct Detection {
    pub acf: Option<AcfProfile>,
    /// Probability that two random slots of the series match.
    pub chance_match: f64,
    pub peaks: Vec<Peak>,
    /// Clusters after the regularity test.
    pub clusters: Vec<PeakCluster>,
    pub candidate_periods: Vec<usize>,
    pub periodicities: Vec<Periodicity>,
}

/// Runs the full pipeline and returns the periodicities ordered by start
/// slot, then period.
pub fn detect<M: MatchOperator + ?Sized>(
    series: &SymbolSeries,
    config: &DetectorConfig,
    op: &M,
) -> Result<Vec<Periodicity>> {
    detect_traced(series, config, op).map(|d| d.periodicities)
}

/// [`detect`], keeping every intermediate product.
///
/// Candidate periods come from the clusters: a cluster with regular peak
/// spacing proposes its median gap and the lag of its tallest peak; a cluster that fails the regularity
/// test, or holds a single peak, proposes each of its peak lags. Every
/// candidate is then characterized, which is where most candidates die.
pub fn detect_traced<M: MatchOperator + ?Sized>(
    series: &SymbolSeries,
    config: &DetectorConfig,
    op: &M,
) -> Result<Detection> {
    config.validate()?;
    let slots = series.slots();
    let n = slots.len();
    let mut out = Detection::default();
    let max_lag =
        (libm::floor(n as f64 * config.max_lag_fraction) as usize).min(n.saturating_sub(1));
    if n < 4 || max_lag == 0 || slots.iter().all(|s| s.is_missing()) {
        return Ok(out);
    }

    let acf = autocorrelate(slots, op, max_lag)?;
    let symbols = series.table().len();
    let rates = op.match_rates(slots, symbols);
    let counts = symbol_counts(slots, symbols);
    let present: usize = counts.iter().sum();
    let within: f64 = counts
        .iter()
        .zip(&rates)
        .map(|(&c, &q)| c as f64 / present as f64 * q)
        .sum();
    let coverage = present as f64 / n as f64;
    out.chance_match = coverage * coverage * within;

    let baseline = AcfBaseline {
        match_probability: out.chance_match,
        min_z: config.peak_z,
    };
    out.peaks = detect_peaks_with(&acf, config.peak_threshold, Some(&baseline));

    let mut candidates = BTreeSet::new();
    out.clusters = propose(&out.peaks, config, &mut candidates);
    let min_window = (libm::ceil(n as f64 * config.min_window_fraction) as usize).max(MIN_WINDOW);
    let mut window = n / 2;
    while window >= min_window {
        let lag = libm::floor(window as f64 * config.max_lag_fraction) as usize;
        let hop = window / 2;
        let mut start = 0;
        loop {
            let start_here = start.min(n - window);
            let local = autocorrelate(&slots[start_here..start_here + window], op, lag)?;
            let peaks = detect_peaks_with(&local, config.peak_threshold, Some(&baseline));
            propose(&peaks, config, &mut candidates);
            if start_here + window >= n {
                break;
            }
            start += hop;
        }
        window /= 2;
    }
    out.candidate_periods = candidates
        .into_iter()
        .filter(|&p| p >= 2 && 2 * p <= n)
        .collect();

    let gate = RunGate::with_budget(rates, n, out.candidate_periods.len(), config.run_alpha);
    let mut found: Vec<Periodicity> = out
        .candidate_periods
        .iter()
        .flat_map(|&p| {
            characterize_with(
                slots,
                p,
                op,
                config.tolerance.tolerance_for(p),
                config.min_repetitions,
                Some(&gate),
            )
        })
        .collect();
    found = resolve_overlaps(suppress_harmonics(found, op, &config.tolerance));
    found.sort_by_key(|p| (p.start_slot, p.period, p.end_slot));
    out.periodicities = found;
    out.acf = Some(acf);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_of(s: &str) -> SymbolSeries {
        SymbolSeries::from_raw("t", 0, 1, s.chars().map(|c| Some([c as u8]))).unwrap()
    }

    #[test]
    fn exact_lag_count_skips_missing() {
        let s = SymbolSeries::from_raw("m", 0, 1, [Some("A"), None, Some("A"), None]).unwrap();
        assert_eq!(ExactMatch.lag_count(s.slots(), 2), 1);
        let generic: &dyn MatchOperator = &ExactMatch;
        assert_eq!(generic.lag_count(s.slots(), 2), 1);
    }

    #[test]
    fn default_match_rates_agree_with_exact_rates() {
        struct Plain;
        impl MatchOperator for Plain {
            fn matches(&self, a: Symbol, b: Symbol) -> bool {
                a == b
            }
        }
        let s = series_of("AABCAB");
        assert_eq!(
            Plain.match_rates(s.slots(), 3),
            ExactMatch.match_rates(s.slots(), 3)
        );
    }

    #[test]
    fn distinct_under_exact_counts_symbols() {
        let s = SymbolSeries::from_raw("m", 0, 1, [Some("A"), None, Some("B"), Some("A")]).unwrap();
        assert_eq!(distinct_under(s.slots(), &ExactMatch), 3);
    }

    #[test]
    fn alternation_has_period_two() {
        let s = series_of(&"AB".repeat(60));
        let found = detect(&s, &DetectorConfig::default(), &ExactMatch).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].period, 2);
        assert_eq!((found[0].start_slot, found[0].end_slot), (0, 120));
    }

    #[test]
    fn all_missing_series_is_quiet() {
        let s = SymbolSeries::from_raw::<_, &str>("m", 0, 1, (0..50).map(|_| None)).unwrap();
        assert!(detect(&s, &DetectorConfig::default(), &ExactMatch)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn constant_series_is_quiet() {
        let s = series_of(&"A".repeat(90));
        assert!(detect(&s, &DetectorConfig::default(), &ExactMatch)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_config_is_an_error() {
        let s = series_of("ABABABAB");
        let cfg = DetectorConfig {
            min_repetitions: 0,
            ..DetectorConfig::default()
        };
        assert!(detect(&s, &cfg, &ExactMatch).is_err());
    }

    #[test]
    fn regular_gaps_in_a_constant_path_are_quiet() {
        let slots = (0..300).map(|i| (i % 23 != 7).then_some(*b"A"));
        let s = SymbolSeries::from_raw("t", 0, 1, slots).unwrap();
        assert!(detect(&s, &DetectorConfig::default(), &ExactMatch)
            .unwrap()
            .is_empty());
    }
}
