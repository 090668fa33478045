use alloc::vec::Vec;

use super::Peak;
use crate::stats::{coefficient_of_variation, median};

#[derive(Clone, Debug, PartialEq)]
pub struct PeakCluster {
    /// Retained peaks, ordered by lag.
    pub peaks: Vec<Peak>,
    /// Regular inter-peak spacing, when one was found.
    pub candidate_period: Option<usize>,
    pub discarded_outliers: usize,
}

impl PeakCluster {
    pub fn new(mut peaks: Vec<Peak>) -> Self {
        peaks.sort_by_key(|p| p.lag);
        Self {
            peaks,
            candidate_period: None,
            discarded_outliers: 0,
        }
    }

    pub fn lags(&self) -> impl Iterator<Item = usize> + '_ {
        self.peaks.iter().map(|p| p.lag)
    }
}

/// Single-linkage clustering of peaks on their heights: two peaks share a
/// cluster when a chain of peaks links them with height steps of at most
/// `eps_y`. Clusters come back ordered by their smallest lag.
pub fn cluster_peaks(peaks: &[Peak], eps_y: f64) -> Vec<PeakCluster> {
    if peaks.is_empty() {
        return Vec::new();
    }
    let mut by_height: Vec<Peak> = peaks.to_vec();
    by_height.sort_by(|a, b| a.height.total_cmp(&b.height).then(a.lag.cmp(&b.lag)));

    let mut clusters = Vec::new();
    let mut current = Vec::new();
    let mut last_height = by_height[0].height;
    for p in by_height {
        if !current.is_empty() && p.height - last_height > eps_y {
            clusters.push(PeakCluster::new(core::mem::take(&mut current)));
        }
        last_height = p.height;
        current.push(p);
    }
    clusters.push(PeakCluster::new(current));
    clusters.sort_by_key(|c| c.peaks[0].lag);
    clusters
}

fn gaps(lags: &[usize]) -> Vec<f64> {
    lags.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

/// Tests whether the cluster's peaks are evenly spaced, dropping up to
/// `max_outlier_fraction` of them greedily (each time the peak whose removal
/// lowers the gap CV the most). On success `candidate_period` is the median
/// gap. Clusters of fewer than two peaks are rejected.
pub fn regularize_cluster(
    cluster: &PeakCluster,
    cv_threshold: f64,
    max_outlier_fraction: f64,
) -> PeakCluster {
    let mut out = PeakCluster::new(cluster.peaks.clone());
    if out.peaks.len() < 2 {
        return out;
    }
    let budget = libm::floor(max_outlier_fraction * out.peaks.len() as f64) as usize;
    let mut kept: Vec<usize> = out.lags().collect();
    let mut removed: Vec<usize> = Vec::new();
    let mut cv = coefficient_of_variation(&gaps(&kept));

    while cv > cv_threshold && removed.len() < budget && kept.len() > 2 {
        let (best_idx, best_cv) = (0..kept.len())
            .map(|i| {
                let mut trial = kept.clone();
                trial.remove(i);
                (i, coefficient_of_variation(&gaps(&trial)))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("cluster has more than two peaks");
        removed.push(kept.remove(best_idx));
        cv = best_cv;
    }

    if cv <= cv_threshold {
        let period = libm::round(median(&gaps(&kept))) as usize;
        out.peaks.retain(|p| !removed.contains(&p.lag));
        out.discarded_outliers = removed.len();
        out.candidate_period = Some(period).filter(|&p| p > 0);
    }
    out
}
