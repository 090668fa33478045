use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Periodicity, Slot, SymbolSeries};
use crate::rng::child_seed;

/// Parameters of the synthetic corpus. Defaults are the full-scale
/// experiment: 5,000 one-week series at one-minute cadence over 30 paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub series_count: usize,
    pub slots_per_series: usize,
    pub alphabet_size: usize,
    pub period_min: usize,
    pub period_max: usize,
    /// Repetitions of the pattern inside one planted interval.
    pub repetitions_min: usize,
    pub repetitions_max: usize,
    /// Seconds between slots in the emitted series.
    pub step: u64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            series_count: 5_000,
            slots_per_series: 10_000,
            alphabet_size: 30,
            period_min: 2,
            period_max: 30,
            repetitions_min: 3,
            repetitions_max: 40,
            step: 60,
            seed: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.alphabet_size < 2 {
            return fail(format!(
                "alphabet_size = {} must be >= 2",
                self.alphabet_size
            ));
        }
        if self.period_min < 2 || self.period_max < self.period_min {
            return fail(format!(
                "period range [{}, {}] must satisfy 2 <= min <= max",
                self.period_min, self.period_max
            ));
        }
        if self.repetitions_min < 2 || self.repetitions_max < self.repetitions_min {
            return fail(format!(
                "repetition range [{}, {}] must satisfy 2 <= min <= max",
                self.repetitions_min, self.repetitions_max
            ));
        }
        if self.slots_per_series < 2 * self.period_max {
            return fail(format!(
                "slots_per_series = {} must be at least twice the largest period",
                self.slots_per_series
            ));
        }
        if self.step == 0 {
            return Err(Error::ZeroStep);
        }
        Ok(())
    }

    pub fn series_id(&self, index: usize) -> String {
        format!("series-{index:05}")
    }
}

/// A planted periodicity. Its pattern refers to the symbol table of the
/// series it was planted in.
pub type Planted = Periodicity;

/// Ground truth of one generated series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesTruth {
    pub series_id: String,
    pub planted: Vec<Planted>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub series: Vec<SeriesTruth>,
}

impl GroundTruth {
    pub fn planted_count(&self) -> usize {
        self.series.iter().map(|s| s.planted.len()).sum()
    }
}

enum Block {
    Periodic {
        pattern: Vec<u32>,
        repetitions: usize,
    },
    Random(Vec<u32>),
}

impl Block {
    fn len(&self) -> usize {
        match self {
            Block::Periodic {
                pattern,
                repetitions,
            } => pattern.len() * repetitions,
            Block::Random(v) => v.len(),
        }
    }
}

pub(crate) fn path_name(id: u32) -> String {
    format!("path-{id:02}")
}

/// Generates series `index` of the corpus described by `config`.
///
/// Periodic and random blocks alternate until the series is full; a
/// periodic block that would overflow is replaced by random filler. The
/// block order is then shuffled. Random blocks take their length from the
/// same period-times-repetitions draw as periodic ones.
pub fn generate_series(
    config: &GeneratorConfig,
    index: usize,
) -> Result<(SymbolSeries, SeriesTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(config.seed, index as u64));
    let alphabet = config.alphabet_size as u32;
    let total = config.slots_per_series;

    let mut blocks = Vec::new();
    let mut filled = 0;
    let mut periodic = true;
    while filled < total {
        let period = rng.gen_range(config.period_min..=config.period_max);
        let repetitions = rng.gen_range(config.repetitions_min..=config.repetitions_max);
        let len = period * repetitions;
        if periodic && filled + len <= total {
            let pattern = (0..period).map(|_| rng.gen_range(0..alphabet)).collect();
            blocks.push(Block::Periodic {
                pattern,
                repetitions,
            });
            filled += len;
        } else if !periodic {
            let len = len.min(total - filled);
            blocks.push(Block::Random(
                (0..len).map(|_| rng.gen_range(0..alphabet)).collect(),
            ));
            filled += len;
        } else {
            let rest = total - filled;
            blocks.push(Block::Random(
                (0..rest).map(|_| rng.gen_range(0..alphabet)).collect(),
            ));
            filled = total;
        }
        periodic = !periodic;
    }
    blocks.shuffle(&mut rng);

    let mut ids: Vec<u32> = Vec::with_capacity(total);
    let mut planted_at: Vec<(usize, usize, usize)> = Vec::new();
    for block in &blocks {
        let start = ids.len();
        match block {
            Block::Periodic {
                pattern,
                repetitions,
            } => {
                for _ in 0..*repetitions {
                    ids.extend_from_slice(pattern);
                }
                planted_at.push((start, pattern.len(), *repetitions));
            }
            Block::Random(v) => ids.extend_from_slice(v),
        }
        debug_assert_eq!(ids.len(), start + block.len());
    }

    let names: Vec<String> = (0..alphabet).map(path_name).collect();
    let series = SymbolSeries::from_raw(
        config.series_id(index),
        0,
        config.step,
        ids.iter().map(|&id| Some(names[id as usize].as_bytes())),
    )?;
    let planted = planted_at
        .into_iter()
        .map(|(start, period, repetitions)| Planted {
            period,
            pattern: series.slots()[start..start + period].to_vec(),
            start_slot: start,
            end_slot: start + period * repetitions,
            repetitions,
            mismatch_count: 0,
        })
        .collect();
    let truth = SeriesTruth {
        series_id: config.series_id(index),
        planted,
    };
    Ok((series, truth))
}

/// Generates the whole corpus serially.
pub fn generate(config: &GeneratorConfig) -> Result<(Vec<SymbolSeries>, GroundTruth)> {
    config.validate()?;
    let mut all = Vec::with_capacity(config.series_count);
    let mut truth = GroundTruth::default();
    for i in 0..config.series_count {
        let (s, t) = generate_series(config, i)?;
        all.push(s);
        truth.series.push(t);
    }
    Ok((all, truth))
}

/// A series holding `pattern` repeated `repetitions` times between `before`
/// and `after` sentinel slots, each sentinel a symbol that occurs once.
/// Pattern entries are path ids as in [`generate_series`].
pub fn isolated_plant(
    pattern: &[u32],
    repetitions: usize,
    before: usize,
    after: usize,
) -> Result<(SymbolSeries, Planted)> {
    if pattern.is_empty() || repetitions == 0 {
        return Err(Error::InvalidConfig("empty plant".into()));
    }
    let period = pattern.len();
    let body = period * repetitions;
    let raw = (0..before + body + after).map(|i| {
        if i < before || i >= before + body {
            format!("sentinel-{i}")
        } else {
            path_name(pattern[(i - before) % period])
        }
    });
    let series = SymbolSeries::from_raw("plant", 0, 1, raw.map(Some))?;
    let planted = Planted {
        period,
        pattern: series.slots()[before..before + period].to_vec(),
        start_slot: before,
        end_slot: before + body,
        repetitions,
        mismatch_count: 0,
    };
    Ok((series, planted))
}

/// Checks that a slot run really repeats `pattern`.
pub fn is_exact_repetition(slots: &[Slot], pattern: &[Slot]) -> bool {
    !pattern.is_empty()
        && slots.len().is_multiple_of(pattern.len())
        && slots.chunks(pattern.len()).all(|c| c == pattern)
}
