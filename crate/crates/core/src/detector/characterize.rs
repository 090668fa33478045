use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::MatchOperator;
use crate::model::{Periodicity, Slot};
use crate::stats::ln_choose;

/// Slotwise mismatch count between two equally long slot runs. Missing slots
/// always count as mismatches.
pub fn hamming<M: MatchOperator + ?Sized>(a: &[Slot], b: &[Slot], op: &M) -> usize {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !op.slots_match(**x, **y))
        .count()
}

/// Smallest `d` dividing `pattern.len()` such that the pattern, read
/// cyclically, repeats every `d` slots.
pub fn cyclic_period<M: MatchOperator + ?Sized>(pattern: &[Slot], op: &M) -> usize {
    let p = pattern.len();
    (1..p)
        .filter(|d| p.is_multiple_of(*d))
        .find(|&d| (0..p).all(|i| op.slots_match(pattern[i], pattern[(i + d) % p])))
        .unwrap_or(p)
}

/// Whether `pattern` is within `tolerance` mismatches of a block of some
/// proper divisor length repeated to fill it. Such patterns are ambiguous:
/// the tolerance rule lets the shorter period explain them.
pub fn has_approximate_subperiod<M: MatchOperator + ?Sized>(pattern: &[Slot], op: &M, tolerance: usize) -> bool {
    let p = pattern.len();
    (1..p).filter(|d| p.is_multiple_of(*d)).any(|d| {
        // Per residue class, the cheapest block value is one of the class's
        // own slots.
        let cost: usize = (0..d)
            .map(|r| {
                let class: Vec<Slot> = pattern.iter().skip(r).step_by(d).copied().collect();
                class
                    .iter()
                    .map(|&c| class.iter().filter(|&&o| !op.slots_match(c, o)).count())
                    .min()
                    .unwrap_or(0)
            })
            .sum();
        cost <= tolerance
    })
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Statistical floor for accepting a glued run.
///
/// A run is scored by how unlikely its slot agreements are when each slot
/// only matches a random other slot at its symbol's base rate. Runs scoring
/// below `min_score` (a negative log-probability) are treated as chance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunGate {
    rates: Vec<f64>,
    min_score: f64,
}

impl RunGate {
    pub fn new(rates: Vec<f64>, min_score: f64) -> Self {
        Self { rates, min_score }
    }

    /// Gate expecting about `alpha` chance runs per series when scanning
    /// `candidates` periods over `series_len` slots.
    pub fn with_budget(rates: Vec<f64>, series_len: usize, candidates: usize, alpha: f64) -> Self {
        let trials = (series_len.max(1) * candidates.max(1)) as f64;
        Self::new(rates, libm::log(trials / alpha))
    }

    pub fn min_score(&self) -> f64 {
        self.min_score
    }

    fn rate(&self, slot: Slot) -> f64 {
        slot.symbol()
            .and_then(|s| self.rates.get(s.index()).copied())
            .unwrap_or(0.0)
            .clamp(1e-12, 1.0 - 1e-12)
    }

    /// Negative log-likelihood of the agreement pattern `agree[i]` for the
    /// comparisons anchored at `slots[i]`, less the number of ways to place
    /// the disagreements.
    pub fn score(&self, slots: &[Slot], agree: impl Iterator<Item = bool>) -> f64 {
        let mut total = 0.0;
        let mut comparisons = 0;
        let mut disagreements = 0;
        for (slot, ok) in slots.iter().zip(agree) {
            comparisons += 1;
            if slot.is_missing() {
                if !ok {
                    disagreements += 1;
                }
                continue;
            }
            let q = self.rate(*slot);
            if ok {
                total -= libm::log(q);
            } else {
                disagreements += 1;
                total -= libm::log(1.0 - q);
            }
        }
        total - ln_choose(comparisons, disagreements)
    }
}

/// Largest gap, in periods, between two glued fragments.
const GLUE_GAP_PERIODS: usize = 4;

struct Scan<'a, M: ?Sized> {
    slots: &'a [Slot],
    period: usize,
    op: &'a M,
    /// `mismatch[i]`: slot `i` disagrees with slot `i + period`.
    mismatch: Vec<bool>,
    mismatch_prefix: Vec<u32>,
    /// Per maximal proper divisor `d`, prefix sums of `x(i) != x(i + d)`.
    divisor_prefix: Vec<(usize, Vec<u32>)>,
}

impl<'a, M: MatchOperator + ?Sized> Scan<'a, M> {
    fn new(slots: &'a [Slot], period: usize, op: &'a M) -> Self {
        let shift_mismatch = |d: usize| -> Vec<bool> {
            slots
                .iter()
                .zip(&slots[d..])
                .map(|(a, b)| !op.slots_match(*a, *b))
                .collect()
        };
        let prefix = |flags: &[bool]| -> Vec<u32> {
            let mut acc = 0u32;
            let mut out = Vec::with_capacity(flags.len() + 1);
            out.push(0);
            for &f in flags {
                acc += u32::from(f);
                out.push(acc);
            }
            out
        };
        let mismatch = shift_mismatch(period);
        let mismatch_prefix = prefix(&mismatch);
        let divisor_prefix = prime_factors(period)
            .into_iter()
            .map(|q| {
                let d = period / q;
                (d, prefix(&shift_mismatch(d)))
            })
            .collect();
        Self {
            slots,
            period,
            op,
            mismatch,
            mismatch_prefix,
            divisor_prefix,
        }
    }

    /// Hamming distance between the windows starting at `s` and `s + period`.
    fn pair_distance(&self, s: usize) -> usize {
        (self.mismatch_prefix[s + self.period] - self.mismatch_prefix[s]) as usize
    }

    /// A window that repeats a shorter block is periodic with a smaller
    /// period and does not belong to a run of this one.
    fn is_degenerate(&self, s: usize) -> bool {
        self.divisor_prefix.iter().any(|(d, pre)| {
            let end = s + self.period - d;
            pre[end] == pre[s]
        })
    }

    /// Runs as `(start, windows, summed pair distance)`.
    fn runs(&self, tolerance: usize, min_windows: usize) -> Vec<(usize, usize, usize)> {
        let (n, p) = (self.slots.len(), self.period);
        let mut runs = Vec::new();
        for phase in 0..p {
            let mut start = None;
            let mut count = 0;
            let mut cost = 0;
            let mut s = phase;
            while s + p <= n {
                let usable = !self.is_degenerate(s);
                let d = if start.is_some() && usable {
                    self.pair_distance(s - p)
                } else {
                    usize::MAX
                };
                if d <= tolerance {
                    count += 1;
                    cost += d;
                } else {
                    if let Some(st) = start.take() {
                        if count >= min_windows {
                            runs.push((st, count, cost));
                        }
                    }
                    if usable {
                        start = Some(s);
                        count = 1;
                        cost = 0;
                    }
                }
                s += p;
            }
            if let Some(st) = start {
                if count >= min_windows {
                    runs.push((st, count, cost));
                }
            }
        }
        runs
    }

    /// Grows `[start, end)` slot by slot while the slot keeps matching its
    /// counterpart one period away.
    fn extend(&self, mut start: usize, mut end: usize, lo: usize, hi: usize) -> (usize, usize) {
        let p = self.period;
        while start > lo && !self.mismatch[start - 1] {
            start -= 1;
        }
        while end < hi && end < self.slots.len() && !self.mismatch[end - p] {
            end += 1;
        }
        (start, end)
    }

    fn build(&self, start: usize, end: usize) -> Periodicity {
        let p = self.period;
        let windows = (end - start) / p;
        let chunks: Vec<&[Slot]> = (0..windows)
            .map(|k| &self.slots[start + k * p..start + (k + 1) * p])
            .collect();
        let mut counts: BTreeMap<&[Slot], (usize, usize)> = BTreeMap::new();
        for (k, w) in chunks.iter().enumerate() {
            counts.entry(w).or_insert((0, k)).0 += 1;
        }
        let pattern = counts
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
            .map(|(w, _)| w.to_vec())
            .unwrap_or_default();
        let mismatch_count = chunks.iter().map(|w| hamming(w, &pattern, self.op)).sum();
        Periodicity {
            period: p,
            pattern,
            start_slot: start,
            end_slot: end,
            repetitions: windows,
            mismatch_count,
        }
    }
}

impl<M: MatchOperator + ?Sized> Scan<'_, M> {
    /// Pattern values of `p` that at least two of its windows agree on at
    /// the same position.
    fn supported(&self, p: &Periodicity) -> Vec<Slot> {
        let period = self.period;
        (0..period)
            .filter(|&j| {
                (0..p.repetitions)
                    .filter(|k| self.op.slots_match(self.slots[p.start_slot + k * period + j], p.pattern[j]))
                    .count()
                    >= 2
            })
            .map(|j| p.pattern[j])
            .collect()
    }
}

/// Whether some rotation of `b` is within `tolerance` of `a`.
fn rotation_close<M: MatchOperator + ?Sized>(
    a: &[Slot],
    b: &[Slot],
    tolerance: usize,
    op: &M,
) -> bool {
    let p = a.len();
    p == b.len()
        && (0..p).any(|r| {
            (0..p)
                .filter(|&i| !op.slots_match(a[i], b[(i + r) % p]))
                .count()
                <= tolerance
        })
}

/// Splits the series into windows of `period` slots and glues maximal runs
/// of consecutive windows whose Hamming distance stays within `tolerance`.
///
/// Every phase offset is scanned; where runs from different phases overlap
/// the longest one is kept, then the one with fewer mismatches. Runs are
/// grown slot by slot at both ends while the periodic match holds. Runs that
/// lie within a few periods of each other and carry the same pattern up to rotation are
/// fragments of one interval broken by a phase slip, and are glued. A glued
/// interval needs at least `min_repetitions` windows in total. The pattern is
/// the most frequent window of the longest fragment (earliest on ties).
pub fn characterize<M: MatchOperator + ?Sized>(
    slots: &[Slot],
    period: usize,
    op: &M,
    tolerance: usize,
    min_repetitions: usize,
) -> Vec<Periodicity> {
    characterize_with(slots, period, op, tolerance, min_repetitions, None)
}

/// [`characterize`] with an optional statistical gate on each interval.
pub fn characterize_with<M: MatchOperator + ?Sized>(
    slots: &[Slot],
    period: usize,
    op: &M,
    tolerance: usize,
    min_repetitions: usize,
    gate: Option<&RunGate>,
) -> Vec<Periodicity> {
    let n = slots.len();
    if period == 0 || 2 * period > n {
        return Vec::new();
    }
    let scan = Scan::new(slots, period, op);
    let mut runs = scan.runs(tolerance, 2);
    runs.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));

    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (start, count, _) in runs {
        let end = start + count * period;
        if chosen.iter().all(|&(s, e)| end <= s || start >= e) {
            chosen.push((start, end));
        }
    }
    chosen.sort_unstable();

    let mut fragments = Vec::new();
    let mut floor = 0;
    for (i, &(start, end)) in chosen.iter().enumerate() {
        let ceiling = chosen.get(i + 1).map_or(n, |next| next.0);
        let (start, end) = scan.extend(start, end, floor, ceiling);
        floor = end;
        let p = scan.build(start, end);
        if p.mismatch_count > tolerance * (p.repetitions - 1)
            || cyclic_period(&p.pattern, op) < period
        {
            continue;
        }
        fragments.push(p);
    }

    let mut groups: Vec<Vec<Periodicity>> = Vec::new();
    for f in fragments {
        match groups.last_mut() {
            Some(g)
                if f.start_slot
                    <= g.last().map_or(0, |l| l.end_slot) + GLUE_GAP_PERIODS * period
                    && rotation_close(&g[0].pattern, &f.pattern, tolerance, op) =>
            {
                g.push(f)
            }
            _ => groups.push(alloc::vec![f]),
        }
    }

    let mut out = Vec::new();
    for group in groups {
        let repetitions: usize = group.iter().map(|f| f.repetitions).sum();
        if repetitions < min_repetitions {
            continue;
        }
        // A value seen in one window only was absorbed by the tolerance and
        // says nothing about periodic change.
        let supported: Vec<Slot> = group.iter().flat_map(|f| scan.supported(f)).collect();
        if super::distinct_under(&supported, op) < 2 {
            continue;
        }
        if let Some(gate) = gate {
            let score: f64 = group
                .iter()
                .map(|f| {
                    let cmp = f.start_slot..f.end_slot - period;
                    gate.score(&slots[cmp.clone()], scan.mismatch[cmp].iter().map(|m| !m))
                })
                .sum();
            if score < gate.min_score() {
                continue;
            }
        }
        let main = group
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.repetitions.cmp(&b.1.repetitions).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        out.push(Periodicity {
            period,
            pattern: group[main].pattern.clone(),
            start_slot: group[0].start_slot,
            end_slot: group[group.len() - 1].end_slot,
            repetitions,
            mismatch_count: group.iter().map(|f| f.mismatch_count).sum(),
        });
    }
    out
}
