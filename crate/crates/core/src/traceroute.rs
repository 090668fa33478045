//! Traceroute records, per source-target pair series, and the Paris-id
//! attribution test.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{assign_slots, IngestReport, Periodicity, Symbol, SymbolSeries};
use crate::stats;

/// Separator between hops in a raw path value.
pub const HOP_SEPARATOR: u8 = b'|';

/// One traceroute: the first reply of every hop, `"*"` when none came back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracerouteRecord {
    pub ts: i64,
    pub src: String,
    pub dst: String,
    pub paris_id: Option<u32>,
    pub hops: Vec<String>,
}

impl TracerouteRecord {
    pub fn validate(&self) -> Result<()> {
        if self.hops.is_empty() {
            return Err(Error::InvalidRecord("traceroute without hops".into()));
        }
        if self.paris_id == Some(0) {
            return Err(Error::InvalidRecord("paris_id must be >= 1".into()));
        }
        if let Some(h) = self.hops.iter().find(|h| h.as_bytes().contains(&HOP_SEPARATOR)) {
            return Err(Error::InvalidRecord(format!("hop {h:?} contains the separator")));
        }
        Ok(())
    }
}

/// Raw path value: hops joined by `|`, asterisks kept as they are.
pub fn path_of(record: &TracerouteRecord) -> Vec<u8> {
    let mut out = Vec::new();
    for (i, hop) in record.hops.iter().enumerate() {
        if i > 0 {
            out.push(HOP_SEPARATOR);
        }
        out.extend_from_slice(hop.as_bytes());
    }
    out
}

/// The series of one source-target pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSeries {
    pub src: String,
    pub dst: String,
    pub series: SymbolSeries,
    /// Paris id of the record behind each slot.
    pub paris: Vec<Option<u32>>,
    pub report: IngestReport,
}

impl PairSeries {
    pub fn series_id(src: &str, dst: &str) -> String {
        format!("{src}>{dst}")
    }
}

/// One series per `(src, dst)`, in key order. Records failing
/// [`TracerouteRecord::validate`] are an error.
pub fn group_pairs(records: &[TracerouteRecord], start_ts: i64, end_ts: i64, step: u64) -> Result<Vec<PairSeries>> {
    let mut by_pair: BTreeMap<(&str, &str), Vec<&TracerouteRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        by_pair.entry((r.src.as_str(), r.dst.as_str())).or_default().push(r);
    }
    let mut out = Vec::with_capacity(by_pair.len());
    for ((src, dst), recs) in by_pair {
        let (assigned, report) = assign_slots(recs.iter().map(|r| r.ts), start_ts, end_ts, step)?;
        let paths: Vec<Option<Vec<u8>>> = assigned.iter().map(|a| a.map(|i| path_of(recs[i]))).collect();
        let series = SymbolSeries::from_raw(PairSeries::series_id(src, dst), start_ts, step, paths)?;
        let paris = assigned.iter().map(|a| a.and_then(|i| recs[i].paris_id)).collect();
        out.push(PairSeries {
            src: src.into(),
            dst: dst.into(),
            series,
            paris,
            report,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    pub distinct_paths: usize,
    /// Occurrences per path symbol.
    pub occurrences: BTreeMap<Symbol, usize>,
    /// Population standard deviation of the occurrence counts.
    pub occurrence_std_dev: f64,
}

pub fn pair_stats(series: &SymbolSeries) -> PairStats {
    let mut occurrences = BTreeMap::new();
    for s in series.slots().iter().filter_map(|s| s.symbol()) {
        *occurrences.entry(s).or_insert(0) += 1;
    }
    let counts: Vec<f64> = occurrences.values().map(|&c| c as f64).collect();
    PairStats {
        distinct_paths: occurrences.len(),
        occurrence_std_dev: if counts.is_empty() { 0.0 } else { stats::std_dev(&counts) },
        occurrences,
    }
}

/// Outcome of the Paris-id attribution test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Attribution {
    /// No slot of the interval carries a Paris id.
    Unknown,
    Evaluated {
        /// Some pattern path is locked to a Paris id.
        any_locked: bool,
        /// Every distinct pattern path is locked to some Paris id.
        all_locked: bool,
        /// Paris id to the pattern path it always yields.
        associations: BTreeMap<u32, Symbol>,
    },
}

impl Attribution {
    pub fn is_attributed(&self) -> bool {
        matches!(self, Attribution::Evaluated { any_locked: true, .. })
    }
}

/// Looks for Paris ids that, inside the periodic interval, always come with
/// the same pattern path. An id seen fewer than twice proves nothing and is
/// ignored.
pub fn paris_attribution(pair: &PairSeries, periodicity: &Periodicity) -> Attribution {
    let end = periodicity.end_slot.min(pair.series.len());
    let start = periodicity.start_slot.min(end);
    let slots = &pair.series.slots()[start..end];
    let paris = &pair.paris[start..end];
    if paris.iter().all(Option::is_none) {
        return Attribution::Unknown;
    }
    let pattern: BTreeSet<Symbol> = periodicity.pattern.iter().filter_map(|s| s.symbol()).collect();

    // Per id: occurrences and the single symbol seen so far, if any.
    let mut seen: BTreeMap<u32, (usize, Option<Option<Symbol>>)> = BTreeMap::new();
    for (slot, id) in slots.iter().zip(paris) {
        let Some(id) = *id else { continue };
        let entry = seen.entry(id).or_insert((0, None));
        entry.0 += 1;
        let sym = slot.symbol();
        entry.1 = match entry.1 {
            None => Some(sym),
            Some(prev) if prev == sym => Some(prev),
            Some(_) => Some(None),
        };
    }
    let associations: BTreeMap<u32, Symbol> = seen
        .into_iter()
        .filter_map(|(id, (count, sym))| match sym {
            Some(Some(s)) if count >= 2 && pattern.contains(&s) => Some((id, s)),
            _ => None,
        })
        .collect();
    let locked: BTreeSet<Symbol> = associations.values().copied().collect();
    Attribution::Evaluated {
        any_locked: !associations.is_empty(),
        all_locked: !pattern.is_empty() && pattern.iter().all(|s| locked.contains(s)),
        associations,
    }
}
