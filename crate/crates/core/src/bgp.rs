//! Per-prefix "state of the Internet" series built from BGP updates.
//!
//! A state is the vector of every collector peer's AS-path toward the
//! prefix, or UNREACHABLE for peers without a route. Each distinct state
//! vector becomes one symbol; [`StateMatch`] relaxes symbol equality so that
//! two states coincide when enough peers agree.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::{detect, MatchOperator};
use crate::error::{Error, Result};
use crate::model::{DetectorConfig, Periodicity, Slot, Symbol, SymbolSeries, SymbolTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UpdateKind {
    Announce,
    Withdraw,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgpUpdate {
    pub ts: i64,
    pub peer: String,
    pub prefix: String,
    pub kind: UpdateKind,
    /// Empty for withdrawals.
    pub as_path: Vec<u32>,
}

impl BgpUpdate {
    pub fn announce(ts: i64, peer: impl Into<String>, prefix: impl Into<String>, as_path: Vec<u32>) -> Self {
        Self {
            ts,
            peer: peer.into(),
            prefix: prefix.into(),
            kind: UpdateKind::Announce,
            as_path,
        }
    }

    pub fn withdraw(ts: i64, peer: impl Into<String>, prefix: impl Into<String>) -> Self {
        Self {
            ts,
            peer: peer.into(),
            prefix: prefix.into(),
            kind: UpdateKind::Withdraw,
            as_path: Vec::new(),
        }
    }
}

/// Stable sort by `(ts, peer)`. Same-second updates of one peer keep their
/// input order, so replay leaves the last one in force.
pub fn sort_updates(updates: &mut [BgpUpdate]) {
    updates.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.peer.cmp(&b.peer)));
}

/// Distinct peers of `updates`, sorted.
pub fn peers_of(updates: &[BgpUpdate]) -> Vec<String> {
    updates
        .iter()
        .map(|u| u.peer.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// State id reserved for UNREACHABLE.
pub const UNREACHABLE: u32 = 0;

/// Canonical raw value of a state vector: per peer, the AS-path joined by
/// `-` or `!` when unreachable; peers joined by `;` in peer-list order.
pub fn encode_state(paths: &[Option<&[u32]>]) -> Vec<u8> {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, p) in paths.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        match p {
            None => out.push('!'),
            Some(path) => {
                for (j, asn) in path.iter().enumerate() {
                    if j > 0 {
                        out.push('-');
                    }
                    let _ = write!(out, "{asn}");
                }
            }
        }
    }
    out.into_bytes()
}

/// Inverse of [`encode_state`]; `None` on malformed input.
pub fn decode_state(raw: &[u8]) -> Option<Vec<Option<Vec<u32>>>> {
    let text = core::str::from_utf8(raw).ok()?;
    text.split(';')
        .map(|peer| match peer {
            "!" => Some(None),
            "" => Some(Some(Vec::new())),
            _ => peer.split('-').map(|a| a.parse().ok()).collect::<Option<Vec<u32>>>().map(Some),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StateReport {
    /// Updates outside `[t0, t1)`.
    pub out_of_window: usize,
    /// Updates from peers not in the peer list.
    pub unknown_peer: usize,
    /// Updates for another prefix.
    pub other_prefix: usize,
}

/// The state series of one prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InternetStateSeries {
    pub prefix: String,
    pub peers: Vec<String>,
    /// Distinct AS-paths; state id `k > 0` is `paths[k - 1]`.
    pub paths: Vec<Vec<u32>>,
    /// Per symbol, the state id of every peer.
    pub states: Vec<Vec<u32>>,
    pub series: SymbolSeries,
    pub report: StateReport,
}

impl InternetStateSeries {
    pub fn path(&self, state: u32) -> Option<&[u32]> {
        match state {
            UNREACHABLE => None,
            k => self.paths.get(k as usize - 1).map(Vec::as_slice),
        }
    }

    /// Per-peer AS-paths of the state behind `symbol`.
    pub fn state_of(&self, symbol: Symbol) -> Option<Vec<Option<&[u32]>>> {
        self.states
            .get(symbol.index())
            .map(|ids| ids.iter().map(|&k| self.path(k)).collect())
    }
}

/// Replays `updates` for `prefix` over `[t0, t1)` sampled every `step`
/// seconds. The state at slot time `t` reflects every update with `ts <= t`.
/// All peers start UNREACHABLE.
pub fn build_state_series(
    prefix: &str,
    updates: &[BgpUpdate],
    peers: &[String],
    t0: i64,
    t1: i64,
    step: u64,
) -> Result<InternetStateSeries> {
    build_state_series_seeded(prefix, updates, peers, t0, t1, step, &[])
}

/// [`build_state_series`] with initial per-peer paths; `seed[i]` is peer
/// `i`'s state before the first update, and missing entries are UNREACHABLE.
pub fn build_state_series_seeded(
    prefix: &str,
    updates: &[BgpUpdate],
    peers: &[String],
    t0: i64,
    t1: i64,
    step: u64,
    seed: &[Option<Vec<u32>>],
) -> Result<InternetStateSeries> {
    if step == 0 {
        return Err(Error::ZeroStep);
    }
    if t1 <= t0 {
        return Err(Error::EmptyWindow { start_ts: t0, end_ts: t1 });
    }
    let mut report = StateReport::default();
    let peer_index: BTreeMap<&str, usize> = peers.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();

    let mut path_ids: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    let mut paths: Vec<Vec<u32>> = Vec::new();
    let mut intern_path = |path: &[u32], paths: &mut Vec<Vec<u32>>| -> u32 {
        *path_ids.entry(path.to_vec()).or_insert_with(|| {
            paths.push(path.to_vec());
            paths.len() as u32
        })
    };

    let mut current: Vec<u32> = vec![UNREACHABLE; peers.len()];
    for (i, s) in seed.iter().enumerate().take(peers.len()) {
        if let Some(path) = s {
            current[i] = intern_path(path, &mut paths);
        }
    }

    let mut events: Vec<(i64, usize, Option<&[u32]>)> = Vec::new();
    for u in updates {
        if u.prefix != prefix {
            report.other_prefix += 1;
            continue;
        }
        if u.ts < t0 || u.ts >= t1 {
            report.out_of_window += 1;
            continue;
        }
        let Some(&peer) = peer_index.get(u.peer.as_str()) else {
            report.unknown_peer += 1;
            continue;
        };
        let state = match u.kind {
            UpdateKind::Announce => Some(u.as_path.as_slice()),
            UpdateKind::Withdraw => None,
        };
        events.push((u.ts, peer, state));
    }
    events.sort_by_key(|e| (e.0, e.1));

    let span = (t1 - t0) as u64;
    let count = span.div_ceil(step) as usize;
    let mut table = SymbolTable::new();
    let mut symbol_of: BTreeMap<Vec<u32>, Symbol> = BTreeMap::new();
    let mut states: Vec<Vec<u32>> = Vec::new();
    let mut slots = Vec::with_capacity(count);
    let mut next = 0;
    let mut cached: Option<Symbol> = None;
    for i in 0..count {
        let t = t0 + (i as u64 * step) as i64;
        while next < events.len() && events[next].0 <= t {
            let (_, peer, state) = events[next];
            let id = match state {
                Some(path) => intern_path(path, &mut paths),
                None => UNREACHABLE,
            };
            if current[peer] != id {
                current[peer] = id;
                cached = None;
            }
            next += 1;
        }
        let sym = match cached {
            Some(s) => s,
            None => {
                let sym = match symbol_of.get(&current) {
                    Some(&s) => s,
                    None => {
                        let view: Vec<Option<&[u32]>> = current
                            .iter()
                            .map(|&k| (k != UNREACHABLE).then(|| paths[k as usize - 1].as_slice()))
                            .collect();
                        let s = table.intern(&encode_state(&view));
                        symbol_of.insert(current.clone(), s);
                        states.push(current.clone());
                        s
                    }
                };
                cached = Some(sym);
                sym
            }
        };
        slots.push(Slot::of(sym));
    }

    let series = SymbolSeries::new(prefix, t0, step, slots, table)?;
    Ok(InternetStateSeries {
        prefix: prefix.into(),
        peers: peers.to_vec(),
        paths,
        states,
        series,
        report,
    })
}

/// Whether the share of peers in the same state reaches `threshold`.
/// UNREACHABLE equals only itself.
pub fn state_match(a: &[u32], b: &[u32], threshold: f64) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::PeerMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(agrees(a, b, allowed_differences(a.len(), threshold)))
}

fn allowed_differences(peers: usize, threshold: f64) -> usize {
    // Equal peers must reach ceil(threshold * peers); the epsilon keeps
    // 0.95 * 100 at 95 rather than 95.00000000000001.
    let needed = libm::ceil(threshold * peers as f64 - 1e-9).max(0.0) as usize;
    peers.saturating_sub(needed)
}

fn agrees(a: &[u32], b: &[u32], allowed: usize) -> bool {
    let mut differing = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            differing += 1;
            if differing > allowed {
                return false;
            }
        }
    }
    true
}

/// Default coincidence threshold.
pub const DEFAULT_STATE_THRESHOLD: f64 = 0.95;

/// Relaxed match over the symbols of one [`InternetStateSeries`].
#[derive(Clone, Debug)]
pub struct StateMatch<'a> {
    states: &'a [Vec<u32>],
    allowed: usize,
    /// Row-major bit matrix of pairwise matches, for small alphabets.
    matrix: Option<Vec<u64>>,
}

impl<'a> StateMatch<'a> {
    /// Symbol counts up to this size get a precomputed match matrix.
    const MATRIX_LIMIT: usize = 4096;

    pub fn new(series: &'a InternetStateSeries, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "state threshold = {threshold} is outside (0, 1]"
            )));
        }
        let states = series.states.as_slice();
        let allowed = allowed_differences(series.peers.len(), threshold);
        let k = states.len();
        let matrix = (k <= Self::MATRIX_LIMIT).then(|| {
            let words = k.div_ceil(64);
            let mut m = vec![0u64; k * words];
            for i in 0..k {
                for j in i..k {
                    if agrees(&states[i], &states[j], allowed) {
                        m[i * words + j / 64] |= 1 << (j % 64);
                        m[j * words + i / 64] |= 1 << (i % 64);
                    }
                }
            }
            m
        });
        Ok(Self {
            states,
            allowed,
            matrix,
        })
    }
}

impl MatchOperator for StateMatch<'_> {
    fn matches(&self, a: Symbol, b: Symbol) -> bool {
        if a == b {
            return true;
        }
        let (i, j) = (a.index(), b.index());
        match &self.matrix {
            Some(m) => {
                let words = self.states.len().div_ceil(64);
                m[i * words + j / 64] >> (j % 64) & 1 == 1
            }
            None => agrees(&self.states[i], &self.states[j], self.allowed),
        }
    }
}

/// Runs the detector with [`StateMatch`] in place of symbol equality.
pub fn detect_state_periodicity(
    series: &InternetStateSeries,
    config: &DetectorConfig,
    threshold: f64,
) -> Result<Vec<Periodicity>> {
    let op = StateMatch::new(series, threshold)?;
    detect(&series.series, config, &op)
}

/// Peer flapping added to a synthetic beacon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flapping {
    /// Share of peers that flap.
    pub fraction: f64,
    pub seed: u64,
}

/// Origin AS of the synthetic beacon.
pub const BEACON_ORIGIN: u32 = 12654;
/// Half-period of the beacon schedule in seconds.
pub const BEACON_HALF_PERIOD: i64 = 7200;

/// A beacon announced at `t0`, withdrawn two hours later, announced again
/// two hours after that, and so on while `k * 7200 <= duration`. Peer `i`
/// reaches the beacon through `[64512 + i, 12654]`.
///
/// With `flapping`, a fixed `round(fraction * peers)` subset of peers draws
/// a random reachability every second between the beacon events.
pub fn synth_beacon(
    prefix: &str,
    t0: i64,
    duration: i64,
    peers: &[String],
    flapping: Option<Flapping>,
) -> Vec<BgpUpdate> {
    let path = |i: usize| vec![64512 + i as u32, BEACON_ORIGIN];
    let mut out = Vec::new();
    let mut k = 0;
    while k * BEACON_HALF_PERIOD <= duration {
        let ts = t0 + k * BEACON_HALF_PERIOD;
        for (i, peer) in peers.iter().enumerate() {
            out.push(if k % 2 == 0 {
                BgpUpdate::announce(ts, peer.clone(), prefix, path(i))
            } else {
                BgpUpdate::withdraw(ts, peer.clone(), prefix)
            });
        }
        k += 1;
    }
    if let Some(f) = flapping {
        let flappers = (libm::round(f.fraction * peers.len() as f64) as usize).min(peers.len());
        let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
        let mut chosen: Vec<usize> = (0..peers.len()).collect();
        for i in 0..flappers {
            let j = rng.gen_range(i..peers.len());
            chosen.swap(i, j);
        }
        for t in 0..duration {
            if t % BEACON_HALF_PERIOD == 0 {
                continue;
            }
            for &i in &chosen[..flappers] {
                out.push(if rng.gen_bool(0.5) {
                    BgpUpdate::announce(t0 + t, peers[i].clone(), prefix, path(i))
                } else {
                    BgpUpdate::withdraw(t0 + t, peers[i].clone(), prefix)
                });
            }
        }
    }
    sort_updates(&mut out);
    out
}

/// An adjacent AS pair seen in both orders at one peer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AsSwap {
    pub peer: String,
    /// The smaller AS number of the pair.
    pub low: u32,
    pub high: u32,
}

/// Dispute-reel signature: for each peer, AS pairs adjacent as `u, v` in
/// one path of the pattern's states and as `v, u` in another.
pub fn detect_as_swap(series: &InternetStateSeries, periodicity: &Periodicity) -> Vec<AsSwap> {
    let mut out = BTreeSet::new();
    for (peer_idx, peer) in series.peers.iter().enumerate() {
        let paths: BTreeSet<&[u32]> = periodicity
            .pattern
            .iter()
            .filter_map(|s| s.symbol())
            .filter_map(|s| series.states.get(s.index()))
            .filter_map(|ids| series.path(ids[peer_idx]))
            .collect();
        let adjacent: Vec<BTreeSet<(u32, u32)>> = paths
            .iter()
            .map(|p| p.windows(2).filter(|w| w[0] != w[1]).map(|w| (w[0], w[1])).collect())
            .collect();
        for (i, a) in adjacent.iter().enumerate() {
            for b in &adjacent[i + 1..] {
                for &(u, v) in a {
                    if b.contains(&(v, u)) {
                        out.insert(AsSwap {
                            peer: peer.clone(),
                            low: u.min(v),
                            high: u.max(v),
                        });
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}
