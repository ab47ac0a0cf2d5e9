//! Plain resampling and summary utilities.

use std::collections::BTreeMap;

use blockwords::inference::PosteriorSnapshot;
use blockwords::metrics::GoalDistribution;
use blockwords::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linearly interpolated quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval of the mean at the given coverage.
pub fn bootstrap_ci(xs: &[f64], resamples: usize, coverage: f64, seed: u64) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).sum::<f64>() / xs.len() as f64)
        .collect();
    let tail = (1.0 - coverage) / 2.0;
    (quantile(&means, tail), quantile(&means, 1.0 - tail))
}

/// Average of several runs' snapshots for the same judgment point.
/// Degenerate snapshots contribute nothing.
pub fn mean_distribution<'a>(snapshots: impl IntoIterator<Item = &'a PosteriorSnapshot>) -> GoalDistribution {
    let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
    let mut n = 0usize;
    for s in snapshots {
        if s.degenerate {
            continue;
        }
        n += 1;
        for (w, p) in &s.probs {
            *acc.entry(*w).or_default() += p;
        }
    }
    GoalDistribution::normalized(acc.into_iter().map(|(w, p)| (w, p / n.max(1) as f64))).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile(&xs, 0.1) - 1.3).abs() < 1e-12);
        assert!((std_dev(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let xs: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let (lo, hi) = bootstrap_ci(&xs, BOOTSTRAP_RESAMPLES, 0.95, 3);
        let m = mean(&xs);
        assert!(lo < m && m < hi);
        assert_eq!(bootstrap_ci(&[2.0; 5], 100, 0.95, 1), (2.0, 2.0));
    }
}
