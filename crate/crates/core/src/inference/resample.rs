//! Systematic resampling.

use rand::Rng;

/// Draws `n` indices with one uniform offset and evenly spaced positions
/// over the cumulative normalized weights. Weights are given in log space.
/// Returns `None` if no weight is finite.
pub fn systematic_resample<R: Rng + ?Sized>(log_weights: &[f64], n: usize, rng: &mut R) -> Option<Vec<usize>> {
    let u: f64 = rng.random::<f64>();
    systematic_with_offset(log_weights, n, u)
}

/// Systematic resampling for a fixed offset `u ∈ [0, 1)`.
pub fn systematic_with_offset(log_weights: &[f64], n: usize, u: f64) -> Option<Vec<usize>> {
    let lse = super::log_sum_exp(log_weights.iter().copied());
    if !lse.is_finite() || n == 0 {
        return None;
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - lse).exp()).collect();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..n {
        let pos = (k as f64 + u) / n as f64;
        while pos >= cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_mass() {
        let lw = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(systematic_resample(&lw, 5, &mut rng).unwrap(), vec![1; 5]);
    }

    #[test]
    fn halves_give_one_copy_each_for_every_offset() {
        let lw = [0.5f64.ln(), 0.5f64.ln()];
        for k in 0..1000 {
            let u = k as f64 / 1000.0;
            assert_eq!(systematic_with_offset(&lw, 2, u).unwrap(), vec![0, 1], "u={u}");
        }
    }

    #[test]
    fn all_zero_weights() {
        assert!(systematic_with_offset(&[f64::NEG_INFINITY; 3], 4, 0.3).is_none());
    }

    #[test]
    fn copy_counts_within_rounding() {
        let w = [0.1, 0.25, 0.05, 0.6];
        let lw: Vec<f64> = w.iter().map(|x: &f64| x.ln()).collect();
        for k in 0..200 {
            let idx = systematic_with_offset(&lw, 10, k as f64 / 200.0).unwrap();
            for (j, wj) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&i| i == j).count() as f64;
                assert!((c - 10.0 * wj).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn indicator_expectation_preserved() {
        let w = [0.13, 0.37, 0.5];
        let lw: Vec<f64> = w.iter().map(|x: &f64| x.ln()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 10_000;
        let n = 3;
        let mut hits = 0usize;
        for _ in 0..trials {
            let idx = systematic_resample(&lw, n, &mut rng).unwrap();
            hits += idx.iter().filter(|&&i| i == 0).count();
        }
        let mean = hits as f64 / (trials * n) as f64;
        // Copies of particle 0 per draw are 0 or 1, so the variance of the
        // per-trial fraction is at most p(1-p)/... bounded by 1/4n^2.
        let sd = (w[0] * (1.0 - w[0]) / (trials * n) as f64).sqrt();
        assert!((mean - w[0]).abs() < 3.0 * sd.max(0.5 / (n as f64 * (trials as f64).sqrt())), "{mean}");
    }
}
