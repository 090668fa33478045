use std::io::{BufRead, Write};

use perioscope_core::validation::{Planted, SeriesTruth};
use perioscope_core::SymbolSeries;
use serde::{Deserialize, Serialize};

use super::{raw_text, read_strict, write_lines, ReadError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedRecord {
    pub period: usize,
    pub start_slot: usize,
    pub end_slot: usize,
    pub repetitions: usize,
    pub pattern: Vec<String>,
}

/// Planted periodicities of one generated series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub series_id: String,
    pub planted: Vec<PlantedRecord>,
}

impl TruthRecord {
    pub fn new(series: &SymbolSeries, truth: &SeriesTruth) -> Self {
        let name = |slot: &perioscope_core::Slot| {
            slot.symbol()
                .and_then(|s| series.table().lookup(s))
                .map(raw_text)
                .unwrap_or_default()
        };
        Self {
            series_id: truth.series_id.clone(),
            planted: truth
                .planted
                .iter()
                .map(|p| PlantedRecord {
                    period: p.period,
                    start_slot: p.start_slot,
                    end_slot: p.end_slot,
                    repetitions: p.repetitions,
                    pattern: p.pattern.iter().map(name).collect(),
                })
                .collect(),
        }
    }

    /// Resolves pattern values against `series`' table.
    pub fn to_truth(&self, series: &SymbolSeries) -> Result<SeriesTruth, String> {
        let planted = self
            .planted
            .iter()
            .map(|p| {
                let pattern = p
                    .pattern
                    .iter()
                    .map(|v| {
                        series
                            .table()
                            .get(v.as_bytes())
                            .map(Into::into)
                            .ok_or_else(|| format!("pattern value {v:?} does not occur in series {}", self.series_id))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if p.pattern.len() != p.period || p.end_slot > series.len() || p.start_slot > p.end_slot {
                    return Err(format!("planted interval of series {} is inconsistent", self.series_id));
                }
                Ok(Planted {
                    period: p.period,
                    pattern,
                    start_slot: p.start_slot,
                    end_slot: p.end_slot,
                    repetitions: p.repetitions,
                    mismatch_count: 0,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(SeriesTruth {
            series_id: self.series_id.clone(),
            planted,
        })
    }
}

pub fn read_truth(reader: impl BufRead) -> Result<Vec<TruthRecord>, ReadError> {
    Ok(read_strict(reader)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_truth(writer: impl Write, records: &[TruthRecord]) -> std::io::Result<()> {
    write_lines(writer, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use perioscope_core::validation::{generate_series, GeneratorConfig};

    #[test]
    fn round_trip_through_the_table() {
        let cfg = GeneratorConfig {
            series_count: 1,
            slots_per_series: 1_000,
            ..GeneratorConfig::default()
        };
        let (s, t) = generate_series(&cfg, 0).unwrap();
        let rec = TruthRecord::new(&s, &t);
        let mut buf = Vec::new();
        write_truth(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = read_truth(&buf[..]).unwrap();
        assert_eq!(back[0].to_truth(&s).unwrap(), t);
    }
}
