use std::io::{BufRead, Write};

use perioscope_core::{Periodicity, SymbolSeries};
use serde::{Deserialize, Serialize};

use super::{raw_text, read_strict, write_lines, ReadError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AsSwapRecord {
    pub peer: String,
    pub low: u32,
    pub high: u32,
}

/// One detected periodicity. The optional fields are filled by the
/// traceroute and BGP commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityRecord {
    pub series_id: String,
    pub period_slots: usize,
    pub period_seconds: u64,
    pub start_ts: i64,
    pub end_ts: i64,
    pub repetitions: usize,
    pub mismatch_count: usize,
    pub pattern: Vec<Option<String>>,
    /// Slot interval, kept so records can be scored without the series.
    pub start_slot: usize,
    pub end_slot: usize,
    /// Paris attribution: `"unknown"`, `"none"`, `"any"` or `"all"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paris_attribution: Option<String>,
    /// Paris id to the pattern path it always yields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paris_associations: Option<Vec<(u32, String)>>,
    /// Distinct pattern values under the series' match operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_swaps: Option<Vec<AsSwapRecord>>,
}

impl PeriodicityRecord {
    pub fn new(series: &SymbolSeries, p: &Periodicity) -> Self {
        let step = series.step();
        let start_ts = series.start_ts() + (p.start_slot as u64 * step) as i64;
        let end_ts = series.start_ts() + (p.end_slot as u64 * step) as i64;
        Self {
            series_id: series.series_id().to_string(),
            period_slots: p.period,
            period_seconds: p.period as u64 * step,
            start_ts,
            end_ts,
            repetitions: p.repetitions,
            mismatch_count: p.mismatch_count,
            pattern: p
                .pattern
                .iter()
                .map(|s| s.symbol().and_then(|sym| series.table().lookup(sym)).map(raw_text))
                .collect(),
            start_slot: p.start_slot,
            end_slot: p.end_slot,
            paris_attribution: None,
            paris_associations: None,
            pattern_states: None,
            as_swaps: None,
        }
    }

    /// Rebuilds the periodicity against `series`' symbol table. Pattern
    /// values the table does not hold become missing slots.
    pub fn to_periodicity(&self, series: &SymbolSeries) -> Periodicity {
        Periodicity {
            period: self.period_slots,
            pattern: self
                .pattern
                .iter()
                .map(|v| v.as_deref().and_then(|s| series.table().get(s.as_bytes())).into())
                .collect(),
            start_slot: self.start_slot,
            end_slot: self.end_slot,
            repetitions: self.repetitions,
            mismatch_count: self.mismatch_count,
        }
    }
}

pub fn read_periodicities(reader: impl BufRead) -> Result<Vec<PeriodicityRecord>, ReadError> {
    Ok(read_strict(reader)?.into_iter().map(|(_, r)| r).collect())
}

/// Writes records sorted by `(series_id, start_slot, period_slots)`.
pub fn write_periodicities(writer: impl Write, records: &[PeriodicityRecord]) -> std::io::Result<()> {
    let mut sorted: Vec<&PeriodicityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.series_id, a.start_slot, a.period_slots, a.end_slot).cmp(&(&b.series_id, b.start_slot, b.period_slots, b.end_slot))
    });
    write_lines(writer, &sorted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_fields() {
        let s = SymbolSeries::from_raw("pair", 1000, 60, [Some("A"), Some("B"), Some("A"), Some("B")]).unwrap();
        let p = Periodicity {
            period: 2,
            pattern: s.slots()[..2].to_vec(),
            start_slot: 0,
            end_slot: 4,
            repetitions: 2,
            mismatch_count: 0,
        };
        let r = PeriodicityRecord::new(&s, &p);
        assert_eq!((r.period_seconds, r.start_ts, r.end_ts), (120, 1000, 1240));
        assert_eq!(r.pattern, vec![Some("A".into()), Some("B".into())]);
        assert_eq!(r.to_periodicity(&s), p);
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("paris"));
    }
}
