use std::io::BufRead;

use perioscope_core::traceroute::TracerouteRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_lenient, Malformed, ReadError};

/// Traceroute input line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracerouteLine {
    pub ts: i64,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub paris_id: Option<u32>,
    pub hops: Vec<String>,
}

impl From<TracerouteLine> for TracerouteRecord {
    fn from(l: TracerouteLine) -> Self {
        TracerouteRecord {
            ts: l.ts,
            src: l.src,
            dst: l.dst,
            paris_id: l.paris_id,
            hops: l.hops,
        }
    }
}

/// Reads traceroute lines in input order. Lines that do not parse or fail
/// record validation are skipped and counted.
pub fn read_traceroutes(reader: impl BufRead, malformed: &mut Malformed) -> Result<Vec<TracerouteRecord>, ReadError> {
    let lines = read_lenient::<TracerouteLine>(reader, malformed)?;
    Ok(keep_valid(lines.into_iter().map(|(n, l)| (n, l.into())), malformed))
}

fn keep_valid(records: impl Iterator<Item = (usize, TracerouteRecord)>, malformed: &mut Malformed) -> Vec<TracerouteRecord> {
    records
        .filter_map(|(n, r)| match r.validate() {
            Ok(()) => Some(r),
            Err(e) => {
                malformed.push(n, e);
                None
            }
        })
        .collect()
}

/// Reads measurement-archive traceroute results: one result object per line,
/// or one JSON array of them per line. Each hop keeps its first reply; a
/// hop whose first reply timed out, or that has no replies, becomes `"*"`.
/// The probe id is the source and the destination address the target.
pub fn read_atlas(reader: impl BufRead, malformed: &mut Malformed) -> Result<Vec<TracerouteRecord>, ReadError> {
    let mut out = Vec::new();
    for (n, value) in read_lenient::<Value>(reader, malformed)? {
        let items = match value {
            Value::Array(v) => v,
            other => vec![other],
        };
        for item in items {
            match atlas_record(&item) {
                Some(r) => out.push((n, r)),
                None => malformed.push(n, "not a traceroute result"),
            }
        }
    }
    Ok(keep_valid(out.into_iter(), malformed))
}

fn atlas_record(v: &Value) -> Option<TracerouteRecord> {
    let ts = v.get("timestamp")?.as_i64()?;
    let src = match v.get("prb_id")? {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return None,
    };
    let dst = v.get("dst_addr").or_else(|| v.get("dst_name"))?.as_str()?.to_string();
    let paris_id = match v.get("paris_id") {
        None | Some(Value::Null) => None,
        Some(p) => Some(u32::try_from(p.as_u64()?).ok()?),
    };
    let hops = v
        .get("result")?
        .as_array()?
        .iter()
        .map(|hop| {
            hop.get("result")
                .and_then(Value::as_array)
                .and_then(|replies| replies.first())
                .and_then(|r| r.get("from"))
                .and_then(Value::as_str)
                .unwrap_or("*")
                .to_string()
        })
        .collect();
    Some(TracerouteRecord { ts, src, dst, paris_id, hops })
}
