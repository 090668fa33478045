use std::io::{BufRead, Write};

use perioscope_core::bgp::{sort_updates, BgpUpdate, UpdateKind};
use serde::{Deserialize, Serialize};

use super::{read_lenient, write_lines, Malformed, ReadError};

/// BGP update input line. Withdrawals carry no AS path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgpLine {
    pub ts: i64,
    pub peer: String,
    pub prefix: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_path: Option<Vec<u32>>,
}

impl BgpLine {
    fn into_update(self) -> Result<BgpUpdate, String> {
        match (self.kind.as_str(), self.as_path) {
            ("A", Some(path)) if !path.is_empty() => Ok(BgpUpdate::announce(self.ts, self.peer, self.prefix, path)),
            ("A", _) => Err("announcement without an AS path".into()),
            ("W", None) => Ok(BgpUpdate::withdraw(self.ts, self.peer, self.prefix)),
            ("W", Some(_)) => Err("withdrawal with an AS path".into()),
            (other, _) => Err(format!("unknown update type {other:?}")),
        }
    }

    pub fn from_update(u: &BgpUpdate) -> Self {
        let announce = u.kind == UpdateKind::Announce;
        Self {
            ts: u.ts,
            peer: u.peer.clone(),
            prefix: u.prefix.clone(),
            kind: if announce { "A" } else { "W" }.into(),
            as_path: announce.then(|| u.as_path.clone()),
        }
    }
}

/// Reads updates for `prefix` (all prefixes when `None`), sorted by
/// `(ts, peer)` with file order kept among ties.
pub fn read_bgp_updates(
    reader: impl BufRead,
    prefix: Option<&str>,
    malformed: &mut Malformed,
) -> Result<Vec<BgpUpdate>, ReadError> {
    let mut out = Vec::new();
    for (n, line) in read_lenient::<BgpLine>(reader, malformed)? {
        if prefix.is_some_and(|p| p != line.prefix) {
            continue;
        }
        match line.into_update() {
            Ok(u) => out.push(u),
            Err(e) => malformed.push(n, e),
        }
    }
    sort_updates(&mut out);
    Ok(out)
}

pub fn write_bgp_updates(writer: impl Write, updates: &[BgpUpdate]) -> std::io::Result<()> {
    let lines: Vec<BgpLine> = updates.iter().map(BgpLine::from_update).collect();
    write_lines(writer, &lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INPUT: &str = r#"{"ts":5,"peer":"r1","prefix":"192.0.2.0/24","type":"W"}
{"ts":1,"peer":"r1","prefix":"192.0.2.0/24","type":"A","as_path":[1,2,3]}
{"ts":1,"peer":"r1","prefix":"198.51.100.0/24","type":"A","as_path":[4]}
{"ts":2,"peer":"r1","prefix":"192.0.2.0/24","type":"A"}
{"ts":3,"peer":"r1","prefix":"192.0.2.0/24","type":"X","as_path":[1]}
not json
"#;

    #[test]
    fn filters_sorts_and_counts() {
        let mut bad = Malformed::default();
        let ups = read_bgp_updates(INPUT.as_bytes(), Some("192.0.2.0/24"), &mut bad).unwrap();
        assert_eq!(
            ups,
            vec![
                BgpUpdate::announce(1, "r1", "192.0.2.0/24", vec![1, 2, 3]),
                BgpUpdate::withdraw(5, "r1", "192.0.2.0/24"),
            ]
        );
        assert_eq!(bad.count, 3);
    }

    #[test]
    fn wrong_prefix_leaves_nothing() {
        let mut bad = Malformed::default();
        assert!(read_bgp_updates(INPUT.as_bytes(), Some("203.0.113.0/24"), &mut bad).unwrap().is_empty());
    }

    #[test]
    fn round_trip() {
        let ups = vec![
            BgpUpdate::announce(0, "a", "p", vec![7, 8]),
            BgpUpdate::withdraw(3, "a", "p"),
        ];
        let mut buf = Vec::new();
        write_bgp_updates(&mut buf, &ups).unwrap();
        let mut bad = Malformed::default();
        assert_eq!(read_bgp_updates(&buf[..], None, &mut bad).unwrap(), ups);
        assert_eq!(bad.count, 0);
    }
}
