//! JSON Lines formats.
//!
//! Readers skip blank lines. Series, truth, and periodicity files are our
//! own output, so a malformed line there is an error; measurement inputs
//! (traceroutes, BGP updates) skip and count malformed lines instead.

mod bgp;
mod periodicity;
mod series;
mod traceroute;
mod truth;

pub use bgp::{read_bgp_updates, write_bgp_updates, BgpLine};
pub use periodicity::{read_periodicities, write_periodicities, AsSwapRecord, PeriodicityRecord};
pub use series::{read_series, write_series, SeriesRecord};
pub use traceroute::{read_atlas, read_traceroutes, TracerouteLine};
pub use truth::{read_truth, write_truth, PlantedRecord, TruthRecord};

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Lines that failed to parse, with the first few messages kept for
/// diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Malformed {
    pub count: usize,
    pub samples: Vec<String>,
}

impl Malformed {
    const KEEP: usize = 5;

    fn push(&mut self, line: usize, msg: impl std::fmt::Display) {
        self.count += 1;
        if self.samples.len() < Self::KEEP {
            self.samples.push(format!("line {line}: {msg}"));
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("reading input: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
}

/// Parses every non-blank line as `T`, failing on the first bad one.
pub(crate) fn read_strict<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<(usize, T)>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| ReadError::Parse { line: i + 1, source })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

/// Parses every non-blank line as `T`, counting the ones that do not parse.
pub(crate) fn read_lenient<T: DeserializeOwned>(
    reader: impl BufRead,
    malformed: &mut Malformed,
) -> Result<Vec<(usize, T)>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push((i + 1, v)),
            Err(e) => malformed.push(i + 1, e),
        }
    }
    Ok(out)
}

pub(crate) fn write_lines<T: Serialize>(mut writer: impl Write, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Raw slot value as text. Every value this crate produces is UTF-8.
pub(crate) fn raw_text(raw: &[u8]) -> String {
    String::from_utf8_lossy(raw).into_owned()
}
