use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correlation::{kendall_tau_like, CorrelationReport, SentenceGroup};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Central coverage, e.g. 0.95 for 2.5/97.5 percentiles.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 1000, level: 0.95, seed: 0 }
    }
}

/// Percentile bootstrap interval of `statistic` over resampled `units`.
///
/// Each resample draws its own generator seed from a master generator seeded
/// with `config.seed`, so the result does not depend on evaluation order.
/// Resamples on which the statistic errors are dropped; if more than half
/// fail the interval is reported as unstable.
pub fn bootstrap_ci<T, F>(units: &[T], config: &BootstrapConfig, statistic: F) -> Result<[f64; 2]>
where
    F: Fn(&[&T]) -> Result<f64>,
{
    if units.len() < 2 {
        return Err(Error::InvalidConfig(format!("bootstrap needs at least 2 units, got {}", units.len())));
    }
    if config.resamples == 0 || !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs resamples > 0 and level in (0, 1), got {} and {}",
            config.resamples, config.level
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.resamples).map(|_| master.random()).collect();

    let mut values = Vec::with_capacity(config.resamples);
    let mut sample: Vec<&T> = Vec::with_capacity(units.len());
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample.clear();
        sample.extend((0..units.len()).map(|_| units.choose(&mut rng).expect("nonempty")));
        if let Ok(v) = statistic(&sample) {
            if v.is_finite() {
                values.push(v);
            }
        }
    }
    let failed = config.resamples - values.len();
    if failed * 2 > config.resamples {
        return Err(Error::UnstableBootstrap { failed, total: config.resamples });
    }
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - config.level) / 2.0;
    Ok([percentile(&values, tail), percentile(&values, 1.0 - tail)])
}

/// Linear-interpolation percentile of sorted data (the "type 7" rule).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tau-like report with a bootstrap interval on `tau_all`, resampling input
/// sentences.
pub fn kendall_with_ci(groups: &[SentenceGroup], threshold: f64, config: &BootstrapConfig) -> Result<CorrelationReport> {
    let mut report = kendall_tau_like(groups, threshold)?;
    let ci = bootstrap_ci(groups, config, |sample| {
        let owned: Vec<SentenceGroup> = sample.iter().map(|g| (*g).clone()).collect();
        Ok(kendall_tau_like(&owned, threshold)?.tau_all)
    })?;
    report.ci = Some(ci);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(xs: &[&f64]) -> Result<f64> {
        Ok(xs.iter().copied().sum::<f64>() / xs.len() as f64)
    }

    #[test]
    fn identical_units_give_zero_width() {
        let units = vec![0.7; 5];
        let [lo, hi] = bootstrap_ci(&units, &BootstrapConfig::default(), mean).unwrap();
        assert_eq!(lo, hi);
        assert!((lo - 0.7).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let units: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let cfg = BootstrapConfig { seed: 9, ..Default::default() };
        let a = bootstrap_ci(&units, &cfg, mean).unwrap();
        assert_eq!(a, bootstrap_ci(&units, &cfg, mean).unwrap());
        let other = bootstrap_ci(&units, &BootstrapConfig { seed: 10, ..cfg }, mean).unwrap();
        assert_ne!(a, other);
        assert!(a[0] < a[1]);
    }

    #[test]
    fn unstable_when_mostly_undefined() {
        let units = vec![1.0, 2.0];
        let res = bootstrap_ci(&units, &BootstrapConfig::default(), |_| Err(Error::EmptyComparison));
        assert!(matches!(res, Err(Error::UnstableBootstrap { failed: 1000, total: 1000 })));
    }

    #[test]
    fn needs_two_units() {
        assert!(bootstrap_ci(&[1.0], &BootstrapConfig::default(), mean).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 1.0), 4.0);
        assert_eq!(percentile(&xs, 0.5), 2.5);
    }
}
