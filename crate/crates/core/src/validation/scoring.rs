use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{generate_series, inject_noise, GeneratorConfig, Planted, SeriesTruth};
use crate::detector::{detect, hamming, has_approximate_subperiod, ExactMatch};
use crate::error::Result;
use crate::model::{DetectorConfig, Periodicity, Slot, SymbolSeries, ToleranceRule};
use crate::rng::child_seed;

/// One-to-one pairing between detections and planted periodicities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    /// `(detected index, planted index)`.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_planted: Vec<usize>,
    pub unmatched_detected: Vec<usize>,
}

/// Greedy one-to-one matching by decreasing overlap. A detection may match
/// a planted periodicity of the same period whose interval it overlaps by at
/// least `overlap_threshold` of the shorter of the two.
pub fn match_detections(
    detected: &[Periodicity],
    planted: &[Planted],
    overlap_threshold: f64,
) -> Matching {
    let mut eligible: Vec<(usize, usize, usize)> = Vec::new();
    for (di, d) in detected.iter().enumerate() {
        for (gi, g) in planted.iter().enumerate() {
            if d.period != g.period {
                continue;
            }
            let overlap = d.overlap(g);
            let shorter = d.len().min(g.len());
            if shorter > 0 && overlap as f64 >= overlap_threshold * shorter as f64 {
                eligible.push((overlap, di, gi));
            }
        }
    }
    eligible.sort_by(|a, b| b.0.cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));

    let mut det_used = alloc::vec![false; detected.len()];
    let mut truth_used = alloc::vec![false; planted.len()];
    let mut pairs = Vec::new();
    for (_, di, gi) in eligible {
        if !det_used[di] && !truth_used[gi] {
            det_used[di] = true;
            truth_used[gi] = true;
            pairs.push((di, gi));
        }
    }
    pairs.sort_unstable();
    Matching {
        pairs,
        unmatched_planted: (0..planted.len()).filter(|&i| !truth_used[i]).collect(),
        unmatched_detected: (0..detected.len()).filter(|&i| !det_used[i]).collect(),
    }
}

/// Whether `detected` is some rotation of `planted` within `tolerance`
/// mismatches.
pub fn characterization_correct(detected: &[Slot], planted: &[Slot], tolerance: usize) -> bool {
    let p = planted.len();
    if p == 0 || detected.len() != p {
        return false;
    }
    (0..p).any(|r| {
        let rotated: Vec<Slot> = (0..p).map(|i| planted[(i + r) % p]).collect();
        hamming(detected, &rotated, &ExactMatch) <= tolerance
    })
}

/// Outcome for one planted periodicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlantedOutcome {
    pub period: usize,
    pub repetitions: usize,
    pub found: bool,
    /// Set only for found periodicities.
    pub correctly_characterized: Option<bool>,
    /// The planted pattern repeats a shorter block, up to the tolerance.
    pub subperiodic: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeriesScore {
    pub planted: Vec<PlantedOutcome>,
    pub false_positives: usize,
}

pub fn score_series(
    detected: &[Periodicity],
    planted: &[Planted],
    overlap_threshold: f64,
    rule: &ToleranceRule,
) -> SeriesScore {
    let m = match_detections(detected, planted, overlap_threshold);
    let mut outcomes: Vec<PlantedOutcome> = planted
        .iter()
        .map(|g| PlantedOutcome {
            period: g.period,
            repetitions: g.repetitions,
            found: false,
            correctly_characterized: None,
            subperiodic: has_approximate_subperiod(&g.pattern, &ExactMatch, rule.tolerance_for(g.period)),
        })
        .collect();
    for &(di, gi) in &m.pairs {
        let g = &planted[gi];
        outcomes[gi].found = true;
        outcomes[gi].correctly_characterized = Some(characterization_correct(
            &detected[di].pattern,
            &g.pattern,
            rule.tolerance_for(g.period),
        ));
    }
    SeriesScore {
        planted: outcomes,
        false_positives: m.unmatched_detected.len(),
    }
}

/// Aggregate scores at one noise level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalRow {
    /// Noise as a fraction of planted slots.
    pub noise: f64,
    pub planted: usize,
    pub found: usize,
    pub false_positives: usize,
    pub correctly_characterized: usize,
    pub subperiodic_planted: usize,
    /// Planted and missed counts keyed by period.
    pub by_period: BTreeMap<usize, (usize, usize)>,
    /// Planted and missed counts keyed by repetition count.
    pub by_repetitions: BTreeMap<usize, (usize, usize)>,
}

impl EvalRow {
    pub fn new(noise: f64) -> Self {
        Self {
            noise,
            ..Self::default()
        }
    }

    pub fn add(&mut self, score: &SeriesScore) {
        self.false_positives += score.false_positives;
        for o in &score.planted {
            self.planted += 1;
            let missed = usize::from(!o.found);
            self.found += usize::from(o.found);
            self.subperiodic_planted += usize::from(o.subperiodic);
            if o.correctly_characterized == Some(true) {
                self.correctly_characterized += 1;
            }
            let e = self.by_period.entry(o.period).or_default();
            e.0 += 1;
            e.1 += missed;
            let e = self.by_repetitions.entry(o.repetitions).or_default();
            e.0 += 1;
            e.1 += missed;
        }
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn found_rate(&self) -> f64 {
        Self::ratio(self.found, self.planted)
    }

    pub fn false_negative_rate(&self) -> f64 {
        if self.planted == 0 {
            0.0
        } else {
            1.0 - self.found_rate()
        }
    }

    pub fn false_negatives(&self) -> usize {
        self.planted - self.found
    }

    /// False positives relative to the planted count.
    pub fn false_positive_rate(&self) -> f64 {
        Self::ratio(self.false_positives, self.planted)
    }

    /// Share of found periodicities whose pattern is right.
    pub fn characterization_accuracy(&self) -> f64 {
        Self::ratio(self.correctly_characterized, self.found)
    }

    /// Missed periodicities per period length.
    pub fn false_negatives_by_period(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_period.iter().map(|(&k, &(_, m))| (k, m))
    }

    pub fn false_negatives_by_repetitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_repetitions.iter().map(|(&k, &(_, m))| (k, m))
    }

    /// Miss rate over planted periodicities whose repetition count satisfies `pred`.
    pub fn false_negative_rate_where(&self, pred: impl Fn(usize) -> bool) -> f64 {
        let (total, missed) = self
            .by_repetitions
            .iter()
            .filter(|(k, _)| pred(**k))
            .fold((0, 0), |acc, (_, v)| (acc.0 + v.0, acc.1 + v.1));
        Self::ratio(missed, total)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// Settings of one evaluation run.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub generator: GeneratorConfig,
    pub detector: DetectorConfig,
    /// Noise levels as fractions of the planted slots.
    pub noise_levels: Vec<f64>,
    pub noise_seed: u64,
    pub overlap_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            detector: DetectorConfig::default(),
            noise_levels: alloc::vec![0.0],
            noise_seed: 2,
            overlap_threshold: 0.5,
        }
    }
}

/// Seed of the noise applied to `series_index` at noise level `level_index`.
pub fn noise_seed(parent: u64, level_index: usize, series_index: usize) -> u64 {
    child_seed(child_seed(parent, level_index as u64), series_index as u64)
}

/// Scores series `index` at every noise level of `config`. Work items are
/// independent, so callers may fan these out in any order.
pub fn evaluate_series(config: &EvalConfig, index: usize) -> Result<Vec<SeriesScore>> {
    let (series, truth) = generate_series(&config.generator, index)?;
    score_at_levels(config, index, &series, &truth)
}

/// Scores a given series and its truth at every noise level of `config`;
/// `index` selects the noise seeds. Generator settings are not used.
pub fn score_at_levels(
    config: &EvalConfig,
    index: usize,
    series: &SymbolSeries,
    truth: &SeriesTruth,
) -> Result<Vec<SeriesScore>> {
    config
        .noise_levels
        .iter()
        .enumerate()
        .map(|(level, &noise)| {
            let (noisy, noisy_truth, _) = inject_noise(
                series,
                truth,
                noise,
                noise_seed(config.noise_seed, level, index),
            )?;
            let found = detect(&noisy, &config.detector, &ExactMatch)?;
            Ok(score_series(
                &found,
                &noisy_truth.planted,
                config.overlap_threshold,
                &config.detector.tolerance,
            ))
        })
        .collect()
}

impl EvalReport {
    /// Folds per-series scores (one vector per series, one entry per noise
    /// level) into a report.
    pub fn aggregate<'a>(
        noise_levels: &[f64],
        per_series: impl IntoIterator<Item = &'a [SeriesScore]>,
    ) -> Self {
        let mut rows: Vec<EvalRow> = noise_levels.iter().map(|&n| EvalRow::new(n)).collect();
        for scores in per_series {
            for (row, score) in rows.iter_mut().zip(scores) {
                row.add(score);
            }
        }
        Self { rows }
    }
}

/// Runs the whole experiment serially.
pub fn evaluate(config: &EvalConfig) -> Result<EvalReport> {
    config.generator.validate()?;
    config.detector.validate()?;
    let mut all = Vec::with_capacity(config.generator.series_count);
    for i in 0..config.generator.series_count {
        all.push(evaluate_series(config, i)?);
    }
    Ok(EvalReport::aggregate(
        &config.noise_levels,
        all.iter().map(Vec::as_slice),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Symbol;
    use alloc::vec;

    fn slots(ids: &[u32]) -> Vec<Slot> {
        ids.iter().map(|&i| Slot::of(Symbol::new(i))).collect()
    }

    fn per(period: usize, start: usize, end: usize) -> Periodicity {
        Periodicity {
            period,
            pattern: slots(&(0..period as u32).collect::<Vec<_>>()),
            start_slot: start,
            end_slot: end,
            repetitions: (end - start) / period,
            mismatch_count: 0,
        }
    }

    #[test]
    fn overlap_match() {
        let m = match_detections(&[per(5, 0, 45)], &[per(5, 0, 50)], 0.5);
        assert_eq!(m.pairs, vec![(0, 0)]);
    }

    #[test]
    fn period_must_agree() {
        let m = match_detections(&[per(10, 0, 50)], &[per(5, 0, 50)], 0.5);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_planted, vec![0]);
        assert_eq!(m.unmatched_detected, vec![0]);
    }

    #[test]
    fn no_detections_means_all_missed() {
        let m = match_detections(&[], &[per(5, 0, 50), per(3, 60, 90)], 0.5);
        assert_eq!(m.unmatched_planted.len(), 2);
    }

    #[test]
    fn matching_is_one_to_one() {
        let detected = [per(5, 0, 30), per(5, 25, 50)];
        let planted = [per(5, 0, 50)];
        let m = match_detections(&detected, &planted, 0.5);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.unmatched_detected.len(), 1);
    }

    #[test]
    fn characterization_checks() {
        assert!(characterization_correct(
            &slots(&[0, 1, 2]),
            &slots(&[1, 2, 0]),
            1
        ));
        let g: Vec<u32> = (0..10).collect();
        let mut d = g.clone();
        d[4] = 99;
        assert!(characterization_correct(&slots(&d), &slots(&g), 1));
        assert!(characterization_correct(
            &slots(&[0, 1]),
            &slots(&[0, 2]),
            1
        ));
        assert!(!characterization_correct(
            &slots(&[0, 1]),
            &slots(&[2, 3]),
            1
        ));
        assert!(!characterization_correct(
            &slots(&[0, 1]),
            &slots(&[0, 1, 2]),
            1
        ));
    }

    #[test]
    fn rates_are_complementary() {
        let mut row = EvalRow::new(0.0);
        row.add(&SeriesScore {
            planted: vec![
                PlantedOutcome {
                    period: 4,
                    repetitions: 3,
                    found: true,
                    correctly_characterized: Some(true),
                    subperiodic: false,
                },
                PlantedOutcome {
                    period: 6,
                    repetitions: 12,
                    found: false,
                    correctly_characterized: None,
                    subperiodic: false,
                },
            ],
            false_positives: 1,
        });
        assert_eq!(row.found_rate() + row.false_negative_rate(), 1.0);
        assert_eq!(row.false_positive_rate(), 0.5);
        assert_eq!(row.characterization_accuracy(), 1.0);
        assert_eq!(row.false_negative_rate_where(|r| r >= 10), 1.0);
        assert_eq!(
            row.false_negatives_by_period().collect::<Vec<_>>(),
            vec![(4, 0), (6, 1)]
        );
    }
}
