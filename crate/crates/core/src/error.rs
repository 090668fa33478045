use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Sampling step must be positive.
    ZeroStep,
    /// `end_ts` must be strictly after `start_ts`.
    EmptyWindow {
        start_ts: i64,
        end_ts: i64,
    },
    SlotOutOfRange {
        index: usize,
        len: usize,
    },
    /// A slot refers to a symbol id the table does not hold.
    UnknownSymbol {
        id: u32,
    },
    SeriesTooShort {
        len: usize,
    },
    InvalidLag {
        max_lag: usize,
        len: usize,
    },
    InvalidConfig(String),
    /// Two Internet states were built over different peer universes.
    PeerMismatch {
        left: usize,
        right: usize,
    },
    NoPlantedIntervals,
    /// A measurement record breaks its schema invariants.
    InvalidRecord(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroStep => write!(f, "sampling step must be positive"),
            Error::EmptyWindow { start_ts, end_ts } => {
                write!(f, "empty time window [{start_ts}, {end_ts})")
            }
            Error::SlotOutOfRange { index, len } => {
                write!(
                    f,
                    "slot index {index} out of range for series of {len} slots"
                )
            }
            Error::UnknownSymbol { id } => write!(f, "symbol id {id} is not in the table"),
            Error::SeriesTooShort { len } => {
                write!(f, "series of {len} slots is too short (need at least 2)")
            }
            Error::InvalidLag { max_lag, len } => {
                write!(f, "max lag {max_lag} must satisfy 1 <= lag < {len}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::PeerMismatch { left, right } => {
                write!(
                    f,
                    "state vectors cover different peer sets ({left} vs {right} peers)"
                )
            }
            Error::NoPlantedIntervals => {
                write!(f, "noise requested on a series without planted intervals")
            }
            Error::InvalidRecord(msg) => write!(f, "invalid record: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
