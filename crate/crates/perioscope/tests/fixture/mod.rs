//! Hand-built traceroute corpus: 20 probe-anchor pairs over one week at
//! 15-minute cadence, 7 of them carrying one planted periodicity each.

#![allow(dead_code)]

use perioscope_core::child_seed;

pub const STEP: i64 = 900;
pub const SLOTS: usize = 672;
pub const T0: i64 = 1_499_999_400;

/// A planted periodicity: pair index, period, first slot, repetitions.
#[derive(Clone, Copy, Debug)]
pub struct Plant {
    pub pair: usize,
    pub period: usize,
    pub start: usize,
    pub reps: usize,
}

impl Plant {
    pub fn end(&self) -> usize {
        self.start + self.period * self.reps
    }
}

pub const PLANTS: [Plant; 7] = [
    Plant { pair: 0, period: 2, start: 100, reps: 40 },
    Plant { pair: 3, period: 16, start: 200, reps: 6 },
    Plant { pair: 6, period: 3, start: 300, reps: 30 },
    Plant { pair: 9, period: 4, start: 50, reps: 20 },
    Plant { pair: 12, period: 5, start: 400, reps: 15 },
    Plant { pair: 15, period: 8, start: 250, reps: 10 },
    Plant { pair: 18, period: 2, start: 500, reps: 60 },
];

pub fn pair_name(pair: usize) -> (String, String) {
    (format!("probe-{:02}", pair + 1), format!("anchor-{}", pair % 4 + 1))
}

fn hops(pair: usize, variant: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..5).map(|k| format!("10.{pair}.{variant}.{k}")).collect();
    h.insert(0, format!("192.168.{pair}.1"));
    h.push(format!("203.0.113.{}", pair % 4 + 1));
    h
}

/// The path of slot `i` inside `plant`.
fn planted_path(plant: &Plant, i: usize, paris: u32) -> Vec<String> {
    let phase = (i - plant.start) % plant.period;
    let pair = plant.pair;
    match plant.pair {
        // A path alternating with itself with one hop lost.
        0 => {
            let mut h = hops(pair, 0);
            if phase == 1 {
                h[3] = "*".into();
            }
            h
        }
        // One load-balanced path per Paris id.
        3 => hops(pair, 10 + paris as usize),
        9 => hops(pair, [0, 0, 1, 2][phase]),
        15 => hops(pair, [0, 1, 0, 2, 3, 1, 4, 2][phase]),
        _ => hops(pair, 20 + phase),
    }
}

/// JSON Lines traceroutes of the whole corpus, in time order per pair.
pub fn traceroute_jsonl() -> String {
    let mut out = String::new();
    for pair in 0..20 {
        let (src, dst) = pair_name(pair);
        let plant = PLANTS.iter().find(|p| p.pair == pair);
        let mut rng = child_seed(0x7ace, pair as u64);
        let mut next = || {
            rng = child_seed(rng, 1);
            rng
        };
        // Stable paths that change at random, rarely and for good.
        let mut current = 0usize;
        let mut left = 0u64;
        for i in 0..SLOTS {
            if left == 0 {
                current = (next() % 4) as usize;
                left = 40 + next() % 160;
            }
            left -= 1;
            if plant.is_none() && next() % 97 == 0 {
                continue;
            }
            let paris = (i % 16) as u32 + 1;
            let path = match plant {
                Some(p) if (p.start..p.end()).contains(&i) => planted_path(p, i, paris),
                _ => hops(pair, current),
            };
            let ts = T0 + i as i64 * STEP + (next() % 60) as i64;
            let line = serde_json::json!({
                "ts": ts, "src": src, "dst": dst, "paris_id": paris, "hops": path,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}
