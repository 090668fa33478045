use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SeriesTruth;
use crate::error::{Error, Result};
use crate::model::{Slot, Symbol, SymbolSeries};

/// One kind of noise event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Insert,
    Delete,
    Substitute,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Insert, NoiseKind::Delete, NoiseKind::Substitute];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseReport {
    pub inserts: usize,
    pub deletes: usize,
    pub substitutions: usize,
}

impl NoiseReport {
    pub fn events(&self) -> usize {
        self.inserts + self.deletes + self.substitutions
    }
}

/// Applies `round(fraction * planted slots)` noise events inside the planted
/// intervals. Each event picks a uniformly random planted slot and, with equal
/// probability, inserts a random symbol before it, deletes it, or replaces
/// it with a different random symbol. Interval bounds in the returned truth
/// follow the shifts; planted patterns are left as generated.
pub fn inject_noise(
    series: &SymbolSeries,
    truth: &SeriesTruth,
    fraction: f64,
    seed: u64,
) -> Result<(SymbolSeries, SeriesTruth, NoiseReport)> {
    inject_noise_with(series, truth, fraction, seed, &NoiseKind::ALL)
}

/// [`inject_noise`] drawing event kinds uniformly from `kinds` only.
pub fn inject_noise_with(
    series: &SymbolSeries,
    truth: &SeriesTruth,
    fraction: f64,
    seed: u64,
    kinds: &[NoiseKind],
) -> Result<(SymbolSeries, SeriesTruth, NoiseReport)> {
    let mut report = NoiseReport::default();
    if fraction < 0.0 || !fraction.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "noise fraction {fraction} must be >= 0"
        )));
    }
    let planted: usize = truth.planted.iter().map(|p| p.len()).sum();
    let symbols = series.table().len() as u32;
    if fraction > 0.0 && (planted == 0 || symbols == 0) {
        return Err(Error::NoPlantedIntervals);
    }
    let events = libm::round(fraction * planted as f64) as usize;
    if events == 0 || kinds.is_empty() {
        return Ok((series.clone(), truth.clone(), report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<Slot> = series.slots().to_vec();
    let mut truth = truth.clone();

    for _ in 0..events {
        let live: usize = truth.planted.iter().map(|p| p.len()).sum();
        if live == 0 {
            break;
        }
        let mut r = rng.gen_range(0..live);
        let which = truth
            .planted
            .iter()
            .position(|p| {
                if r < p.len() {
                    true
                } else {
                    r -= p.len();
                    false
                }
            })
            .expect("offset falls inside some interval");
        let pos = truth.planted[which].start_slot + r;
        match kinds[rng.gen_range(0..kinds.len())] {
            NoiseKind::Insert => {
                let sym = Symbol::new(rng.gen_range(0..symbols));
                slots.insert(pos, Slot::of(sym));
                truth.planted[which].end_slot += 1;
                for p in &mut truth.planted[which + 1..] {
                    p.start_slot += 1;
                    p.end_slot += 1;
                }
                report.inserts += 1;
            }
            NoiseKind::Delete => {
                slots.remove(pos);
                truth.planted[which].end_slot -= 1;
                for p in &mut truth.planted[which + 1..] {
                    p.start_slot -= 1;
                    p.end_slot -= 1;
                }
                report.deletes += 1;
            }
            NoiseKind::Substitute => {
                if symbols > 1 {
                    let current = slots[pos].symbol().map_or(u32::MAX, Symbol::id);
                    let mut pick = rng.gen_range(0..symbols - 1);
                    if pick >= current {
                        pick += 1;
                    }
                    slots[pos] = Slot::of(Symbol::new(pick));
                }
                report.substitutions += 1;
            }
        }
    }

    let noisy = SymbolSeries::new(
        series.series_id(),
        series.start_ts(),
        series.step(),
        slots,
        series.table().clone(),
    )?;
    Ok((noisy, truth, report))
}
