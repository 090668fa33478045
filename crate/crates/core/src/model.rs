use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Interned value (one distinct path or Internet state), scoped to one series.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u32);

impl Symbol {
    pub const fn new(id: u32) -> Self {
        Symbol(id)
    }

    pub const fn id(self) -> u32 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

/// One sampling slot: either a symbol or a missed measurement.
///
/// `MISSING` is not a symbol. It is never interned and never matches
/// anything, itself included.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot(u32);

impl Slot {
    pub const MISSING: Slot = Slot(u32::MAX);

    pub const fn of(symbol: Symbol) -> Self {
        Slot(symbol.0)
    }

    pub const fn is_missing(self) -> bool {
        self.0 == u32::MAX
    }

    pub const fn symbol(self) -> Option<Symbol> {
        if self.is_missing() {
            None
        } else {
            Some(Symbol(self.0))
        }
    }

    /// Raw encoding, `u32::MAX` for missing. Lets hot loops compare slots
    /// without branching on the option.
    pub(crate) const fn bits(self) -> u32 {
        self.0
    }
}

impl From<Symbol> for Slot {
    fn from(symbol: Symbol) -> Self {
        Slot::of(symbol)
    }
}

impl From<Option<Symbol>> for Slot {
    fn from(symbol: Option<Symbol>) -> Self {
        symbol.map_or(Slot::MISSING, Slot::of)
    }
}

impl core::fmt::Debug for Slot {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.symbol() {
            Some(s) => write!(f, "#{}", s.0),
            None => f.write_str("MISSING"),
        }
    }
}

/// Bijective map between raw byte strings and dense symbol ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    entries: Vec<Vec<u8>>,
    index: BTreeMap<Vec<u8>, Symbol>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `raw`, appending it when unseen.
    pub fn intern(&mut self, raw: &[u8]) -> Symbol {
        if let Some(&sym) = self.index.get(raw) {
            return sym;
        }
        let sym = Symbol(self.entries.len() as u32);
        self.entries.push(raw.to_vec());
        self.index.insert(raw.to_vec(), sym);
        sym
    }

    pub fn get(&self, raw: &[u8]) -> Option<Symbol> {
        self.index.get(raw).copied()
    }

    pub fn lookup(&self, symbol: Symbol) -> Option<&[u8]> {
        self.entries.get(symbol.index()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &[u8])> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, raw)| (Symbol(i as u32), raw.as_slice()))
    }
}

/// A regularly sampled sequence of symbols. Slot `i` stands for time
/// `start_ts + i * step`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSeries {
    series_id: String,
    start_ts: i64,
    step: u64,
    slots: Vec<Slot>,
    table: SymbolTable,
}

impl SymbolSeries {
    pub fn new(
        series_id: impl Into<String>,
        start_ts: i64,
        step: u64,
        slots: Vec<Slot>,
        table: SymbolTable,
    ) -> Result<Self> {
        if step == 0 {
            return Err(Error::ZeroStep);
        }
        if let Some(bad) = slots
            .iter()
            .filter_map(|s| s.symbol())
            .find(|s| s.index() >= table.len())
        {
            return Err(Error::UnknownSymbol { id: bad.id() });
        }
        Ok(Self {
            series_id: series_id.into(),
            start_ts,
            step,
            slots,
            table,
        })
    }

    /// Builds a series from raw slot values, interning in slot order.
    pub fn from_raw<I, V>(
        series_id: impl Into<String>,
        start_ts: i64,
        step: u64,
        raw: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = Option<V>>,
        V: AsRef<[u8]>,
    {
        let mut table = SymbolTable::new();
        let slots = raw
            .into_iter()
            .map(|v| match v {
                Some(v) => Slot::of(table.intern(v.as_ref())),
                None => Slot::MISSING,
            })
            .collect();
        Self::new(series_id, start_ts, step, slots, table)
    }

    pub fn series_id(&self) -> &str {
        &self.series_id
    }

    pub fn start_ts(&self) -> i64 {
        self.start_ts
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Time of slot `i`. `i == len()` is accepted and gives the end of the
    /// covered window.
    pub fn slot_time(&self, i: usize) -> Result<i64> {
        if i > self.slots.len() {
            return Err(Error::SlotOutOfRange {
                index: i,
                len: self.slots.len(),
            });
        }
        Ok(self.start_ts + (i as i64) * (self.step as i64))
    }

    pub fn end_ts(&self) -> i64 {
        self.start_ts + (self.slots.len() as i64) * (self.step as i64)
    }

    pub fn raw_at(&self, i: usize) -> Option<&[u8]> {
        self.slots
            .get(i)
            .and_then(|s| s.symbol())
            .and_then(|s| self.table.lookup(s))
    }

    /// Raw value for each slot, `None` where missing.
    pub fn raw_slots(&self) -> impl Iterator<Item = Option<&[u8]>> + '_ {
        self.slots
            .iter()
            .map(|s| s.symbol().and_then(|sym| self.table.lookup(sym)))
    }

    pub fn with_series_id(mut self, series_id: impl Into<String>) -> Self {
        self.series_id = series_id.into();
        self
    }
}

/// Counters gathered while gridding timestamped records onto slots.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    /// Records that lost their slot to an earlier one.
    pub duplicates: usize,
    /// Records outside `[start_ts, end_ts)`.
    pub dropped: usize,
}

/// Picks, for each slot of the grid, the index of the record that fills it.
///
/// The earliest timestamp wins a slot; equal timestamps keep input order.
pub(crate) fn assign_slots(
    timestamps: impl IntoIterator<Item = i64>,
    start_ts: i64,
    end_ts: i64,
    step: u64,
) -> Result<(Vec<Option<usize>>, IngestReport)> {
    if step == 0 {
        return Err(Error::ZeroStep);
    }
    if end_ts <= start_ts {
        return Err(Error::EmptyWindow { start_ts, end_ts });
    }
    let span = (end_ts - start_ts) as u64;
    let n = span.div_ceil(step) as usize;
    let mut winner: Vec<Option<(i64, usize)>> = alloc::vec![None; n];
    let mut report = IngestReport::default();
    for (idx, ts) in timestamps.into_iter().enumerate() {
        if ts < start_ts || ts >= end_ts {
            report.dropped += 1;
            continue;
        }
        let slot = ((ts - start_ts) as u64 / step) as usize;
        match &mut winner[slot] {
            cell @ None => *cell = Some((ts, idx)),
            Some(current) => {
                report.duplicates += 1;
                if ts < current.0 {
                    *current = (ts, idx);
                }
            }
        }
    }
    Ok((
        winner.into_iter().map(|w| w.map(|(_, i)| i)).collect(),
        report,
    ))
}

/// Grids `(timestamp, raw value)` records onto `[start_ts, end_ts)` with the
/// given step. Empty slots become `MISSING`.
pub fn series_from_records<V: AsRef<[u8]>>(
    series_id: impl Into<String>,
    records: &[(i64, V)],
    start_ts: i64,
    end_ts: i64,
    step: u64,
) -> Result<(SymbolSeries, IngestReport)> {
    let (assigned, report) = assign_slots(records.iter().map(|r| r.0), start_ts, end_ts, step)?;
    let series = SymbolSeries::from_raw(
        series_id,
        start_ts,
        step,
        assigned.iter().map(|a| a.map(|i| records[i].1.as_ref())),
    )?;
    Ok((series, report))
}

/// A detected (or planted) periodicity: `pattern` repeats with period
/// `period` over the half-open slot interval `[start_slot, end_slot)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Periodicity {
    pub period: usize,
    pub pattern: Vec<Slot>,
    pub start_slot: usize,
    pub end_slot: usize,
    pub repetitions: usize,
    /// Slots that disagree with the pattern inside the glued windows.
    pub mismatch_count: usize,
}

impl Periodicity {
    pub fn len(&self) -> usize {
        self.end_slot - self.start_slot
    }

    pub fn is_empty(&self) -> bool {
        self.end_slot == self.start_slot
    }

    pub fn overlap(&self, other: &Periodicity) -> usize {
        let lo = self.start_slot.max(other.start_slot);
        let hi = self.end_slot.min(other.end_slot);
        hi.saturating_sub(lo)
    }

    /// Number of distinct symbols in the pattern, ignoring missing slots.
    pub fn distinct_symbols(&self) -> usize {
        let mut seen: Vec<Slot> = self
            .pattern
            .iter()
            .copied()
            .filter(|s| !s.is_missing())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// The tolerance `t_i` allowed between consecutive windows: `1` for short
/// patterns, otherwise a fraction of the pattern length (never below 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceRule {
    pub short_pattern_limit: usize,
    pub fraction: f64,
}

impl Default for ToleranceRule {
    fn default() -> Self {
        Self {
            short_pattern_limit: 5,
            fraction: 0.10,
        }
    }
}

impl ToleranceRule {
    pub fn tolerance_for(&self, period: usize) -> usize {
        if period < self.short_pattern_limit {
            1
        } else {
            let t = libm::round(self.fraction * period as f64) as usize;
            t.max(1)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Largest autocorrelation lag, as a fraction of the series length.
    pub max_lag_fraction: f64,
    /// Absolute floor on the normalized ACF height of a peak. Zero disables it.
    pub peak_threshold: f64,
    /// Minimum z-score of a peak's match count over the chance baseline.
    pub peak_z: f64,
    pub cluster_y_tolerance: f64,
    /// Largest coefficient of variation of inter-peak gaps for a regular cluster.
    pub gap_cv_threshold: f64,
    pub max_outlier_fraction: f64,
    pub min_repetitions: usize,
    pub tolerance: ToleranceRule,
    /// Expected number of chance runs tolerated per series and candidate period.
    pub run_alpha: f64,
    /// Smallest window of the windowed autocorrelation, as a fraction of the
    /// series length. Windows halve from half the series down to this size;
    /// 1 disables them.
    pub min_window_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            max_lag_fraction: 1.0 / 3.0,
            peak_threshold: 0.0,
            peak_z: 3.0,
            cluster_y_tolerance: 0.15,
            gap_cv_threshold: 0.10,
            max_outlier_fraction: 0.20,
            min_repetitions: 3,
            tolerance: ToleranceRule::default(),
            run_alpha: 0.01,
            min_window_fraction: 0.5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        fn unit(name: &str, v: f64, allow_zero: bool) -> Result<()> {
            let ok = v.is_finite() && v <= 1.0 && if allow_zero { v >= 0.0 } else { v > 0.0 };
            if ok {
                Ok(())
            } else {
                let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
                Err(Error::InvalidConfig(format!(
                    "{name} = {v} is outside {range}"
                )))
            }
        }
        unit("max_lag_fraction", self.max_lag_fraction, false)?;
        unit("peak_threshold", self.peak_threshold, true)?;
        unit("cluster_y_tolerance", self.cluster_y_tolerance, false)?;
        unit("gap_cv_threshold", self.gap_cv_threshold, false)?;
        unit("max_outlier_fraction", self.max_outlier_fraction, true)?;
        unit("tolerance.fraction", self.tolerance.fraction, false)?;
        unit("run_alpha", self.run_alpha, false)?;
        unit("min_window_fraction", self.min_window_fraction, false)?;
        if !(self.peak_z.is_finite() && self.peak_z >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "peak_z = {} must be >= 0",
                self.peak_z
            )));
        }
        if self.min_repetitions < 2 {
            return Err(Error::InvalidConfig(format!(
                "min_repetitions = {} must be >= 2",
                self.min_repetitions
            )));
        }
        Ok(())
    }
}
