use std::io::{BufRead, Write};

use perioscope_core::SymbolSeries;
use serde::{Deserialize, Serialize};

use super::{raw_text, read_strict, write_lines, ReadError};

/// Series interchange record; `null` slots are missing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesRecord {
    pub series_id: String,
    pub start_ts: i64,
    pub step: u64,
    pub slots: Vec<Option<String>>,
}

impl SeriesRecord {
    pub fn from_series(series: &SymbolSeries) -> Self {
        Self {
            series_id: series.series_id().to_string(),
            start_ts: series.start_ts(),
            step: series.step(),
            slots: series.raw_slots().map(|r| r.map(raw_text)).collect(),
        }
    }

    pub fn to_series(&self) -> perioscope_core::Result<SymbolSeries> {
        SymbolSeries::from_raw(self.series_id.clone(), self.start_ts, self.step, self.slots.iter().map(|s| s.as_deref()))
    }
}

pub fn read_series(reader: impl BufRead) -> Result<Vec<SymbolSeries>, ReadError> {
    read_strict::<SeriesRecord>(reader)?
        .into_iter()
        .map(|(line, r)| r.to_series().map_err(|e| ReadError::Invalid { line, msg: e.to_string() }))
        .collect()
}

pub fn write_series(writer: impl Write, series: &[SymbolSeries]) -> std::io::Result<()> {
    let records: Vec<SeriesRecord> = series.iter().map(SeriesRecord::from_series).collect();
    write_lines(writer, &records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_missing_slots() {
        let s = SymbolSeries::from_raw("x", 60, 900, [Some("a|b"), None, Some("*")]).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, std::slice::from_ref(&s)).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "{\"series_id\":\"x\",\"start_ts\":60,\"step\":900,\"slots\":[\"a|b\",null,\"*\"]}\n"
        );
        assert_eq!(read_series(&buf[..]).unwrap(), vec![s]);
    }

    #[test]
    fn zero_step_is_reported_with_its_line() {
        let input = "\n{\"series_id\":\"x\",\"start_ts\":0,\"step\":0,\"slots\":[]}\n";
        let err = read_series(input.as_bytes()).unwrap_err();
        assert!(matches!(err, ReadError::Invalid { line: 2, .. }), "{err}");
    }
}
