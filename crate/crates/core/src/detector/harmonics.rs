use alloc::vec::Vec;

use super::characterize::hamming;
use super::MatchOperator;
use crate::model::{Periodicity, Slot, ToleranceRule};

/// Whether `long` is `short` repeated `k` times (some rotation of it),
/// within `tolerance` mismatches.
fn is_repetition_of<M: MatchOperator + ?Sized>(
    long: &[Slot],
    short: &[Slot],
    tolerance: usize,
    op: &M,
) -> bool {
    let p = short.len();
    if p == 0 || !long.len().is_multiple_of(p) {
        return false;
    }
    (0..p).any(|r| {
        let tiled: Vec<Slot> = (0..long.len()).map(|i| short[(i + r) % p]).collect();
        hamming(long, &tiled, op) <= tolerance
    })
}

/// Drops periodicities that are harmonics of a shorter one: the longer period
/// is a multiple of the shorter, the two intervals overlap by at least half of
/// the shorter interval, and the longer pattern is the shorter one repeated
/// within the tolerance of the longer period.
pub fn suppress_harmonics<M: MatchOperator + ?Sized>(
    periodicities: Vec<Periodicity>,
    op: &M,
    rule: &ToleranceRule,
) -> Vec<Periodicity> {
    let n = periodicities.len();
    let mut keep = alloc::vec![true; n];
    for i in 0..n {
        for j in 0..n {
            let (short, long) = (&periodicities[i], &periodicities[j]);
            if i == j || short.period >= long.period || long.period % short.period != 0 {
                continue;
            }
            let shorter = short.len().min(long.len());
            if 2 * short.overlap(long) < shorter {
                continue;
            }
            if is_repetition_of(
                &long.pattern,
                &short.pattern,
                rule.tolerance_for(long.period),
                op,
            ) {
                keep[j] = false;
            }
        }
    }
    periodicities
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Resolves periodicities of different periods that claim the same stretch.
///
/// A stretch with periods `p` and `q` and length at least `p + q - gcd(p, q)`
/// also has period `gcd(p, q)`, so two such claims over a common stretch
/// cannot both be genuine. When the overlap reaches that length and covers
/// at least half of the shorter interval, the shorter interval is dropped.
/// Ties go to fewer mismatches, then to the smaller period.
pub fn resolve_overlaps(periodicities: Vec<Periodicity>) -> Vec<Periodicity> {
    let mut order: Vec<usize> = (0..periodicities.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&periodicities[a], &periodicities[b]);
        y.len()
            .cmp(&x.len())
            .then(x.mismatch_count.cmp(&y.mismatch_count))
            .then(x.period.cmp(&y.period))
            .then(x.start_slot.cmp(&y.start_slot))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let p = &periodicities[i];
        let clash = kept.iter().any(|&k| {
            let q = &periodicities[k];
            let overlap = p.overlap(q);
            q.period != p.period
                && overlap + gcd(p.period, q.period) >= p.period + q.period
                && 2 * overlap >= p.len().min(q.len())
        });
        if !clash {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let mut keep = alloc::vec![false; periodicities.len()];
    for k in kept {
        keep[k] = true;
    }
    periodicities
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}
