use alloc::vec::Vec;

use super::AcfProfile;

/// A strict local maximum of the normalized ACF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub lag: usize,
    pub height: f64,
}

/// Chance level of the ACF: the probability that two unrelated slots match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcfBaseline {
    pub match_probability: f64,
    pub min_z: f64,
}

impl AcfBaseline {
    /// z-score of the match count at `lag` against a binomial null.
    pub fn z_score(&self, acf: &AcfProfile, lag: usize) -> f64 {
        let trials = (acf.series_len() - lag) as f64;
        let p = self.match_probability.clamp(1e-9, 1.0 - 1e-9);
        let expected = trials * p;
        let sd = libm::sqrt(trials * p * (1.0 - p));
        (f64::from(acf.raw_count(lag)) - expected) / sd
    }
}

fn is_strict_local_max(acf: &AcfProfile, lag: usize) -> bool {
    let max_lag = acf.max_lag();
    if max_lag < 2 {
        return false;
    }
    let h = acf.normalized(lag);
    let above_left = lag == 1 || h > acf.normalized(lag - 1);
    let above_right = lag == max_lag || h > acf.normalized(lag + 1);
    above_left && above_right
}

/// Lags whose normalized ACF is a strict local maximum at or above `theta`.
/// Boundary lags are compared with their single neighbour.
pub fn detect_peaks(acf: &AcfProfile, theta: f64) -> Vec<Peak> {
    detect_peaks_with(acf, theta, None)
}

/// Like [`detect_peaks`], additionally requiring each peak to clear the
/// chance baseline by `baseline.min_z` standard deviations.
pub fn detect_peaks_with(
    acf: &AcfProfile,
    theta: f64,
    baseline: Option<&AcfBaseline>,
) -> Vec<Peak> {
    (1..=acf.max_lag())
        .filter(|&lag| {
            let h = acf.normalized(lag);
            h > 0.0
                && h >= theta
                && is_strict_local_max(acf, lag)
                && baseline.is_none_or(|b| b.z_score(acf, lag) >= b.min_z)
        })
        .map(|lag| Peak {
            lag,
            height: acf.normalized(lag),
        })
        .collect()
}
