//! Percentile bootstrap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{substream, BOOTSTRAP_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Central coverage, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 1000, level: 0.95, seed: 0 }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Resampled unit indices (with replacement), one vector per resample.
/// The draws depend only on `n_units` and the config, so statistics
/// bootstrapped with the same config are paired.
pub fn resample_indices(n_units: usize, cfg: &BootstrapConfig) -> Vec<Vec<usize>> {
    if n_units == 0 {
        return Vec::new();
    }
    let mut rng = substream(cfg.seed, BOOTSTRAP_STREAM);
    (0..cfg.resamples).map(|_| (0..n_units).map(|_| rng.random_range(0..n_units)).collect()).collect()
}

/// Central percentile interval of resampled statistics; `None` entries
/// (undefined resamples) are skipped.
pub fn percentile_interval(stats: impl IntoIterator<Item = Option<f64>>, level: f64) -> Option<(f64, f64)> {
    let mut stats: Vec<f64> = stats.into_iter().flatten().collect();
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Some((quantile(&stats, tail), quantile(&stats, 1.0 - tail)))
}

/// Percentile interval of `statistic` over resamples of `n_units` units. The
/// closure receives the resampled unit indices and may return `None` where
/// the statistic is undefined. Returns `None` with fewer than two units or
/// no defined resample.
pub fn bootstrap_ci<F>(n_units: usize, cfg: &BootstrapConfig, mut statistic: F) -> Option<(f64, f64)>
where
    F: FnMut(&[usize]) -> Option<f64>,
{
    if n_units < 2 {
        return None;
    }
    let draws = resample_indices(n_units, cfg);
    percentile_interval(draws.iter().map(|idx| statistic(idx)), cfg.level)
}

/// Bootstrap interval of the sample mean.
pub fn mean_ci(values: &[f64], cfg: &BootstrapConfig) -> Option<(f64, f64)> {
    bootstrap_ci(values.len(), cfg, |idx| Some(idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64))
}
