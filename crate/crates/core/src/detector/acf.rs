use alloc::vec::Vec;

use super::MatchOperator;
use crate::error::{Error, Result};
use crate::model::Slot;

/// Match-count autocorrelation for lags `1..=max_lag`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcfProfile {
    raw: Vec<u32>,
    series_len: usize,
}

impl AcfProfile {
    pub fn from_raw_counts(raw: Vec<u32>, series_len: usize) -> Self {
        debug_assert!(raw.len() < series_len.max(1));
        Self { raw, series_len }
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn max_lag(&self) -> usize {
        self.raw.len()
    }

    /// Number of positions `n` with `x(n)` matching `x(n + lag)`.
    pub fn raw_count(&self, lag: usize) -> u32 {
        self.raw[lag - 1]
    }

    /// `raw_count(lag) / (N - lag)`: the fraction of compared pairs that match.
    pub fn normalized(&self, lag: usize) -> f64 {
        f64::from(self.raw[lag - 1]) / (self.series_len - lag) as f64
    }

    pub fn raw_counts(&self) -> &[u32] {
        &self.raw
    }

    /// `(lag, normalized)` for every lag.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (1..=self.raw.len()).map(move |l| (l, self.normalized(l)))
    }
}

/// `R(l) = sum_n match(x(n), x(n+l))` for `l = 1..=max_lag`.
pub fn autocorrelate<M: MatchOperator + ?Sized>(
    slots: &[Slot],
    op: &M,
    max_lag: usize,
) -> Result<AcfProfile> {
    let n = slots.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { len: n });
    }
    if max_lag == 0 || max_lag >= n {
        return Err(Error::InvalidLag { max_lag, len: n });
    }
    let raw = (1..=max_lag).map(|lag| op.lag_count(slots, lag)).collect();
    Ok(AcfProfile { raw, series_len: n })
}
