use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Shards per cell are limited so that `(stream << 8) | shard` stays collision free.
pub const MAX_SHARDS: usize = 256;

/// Camera counts for one setting. Cells are laid out as `(pixel, +), (pixel, -)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    pub counts: Vec<u64>,
    /// Photons assigned to the probability deficit `1 - Σp` (round-off or loss).
    pub undetected: u64,
    pub shots: u64,
    pub seed: u64,
    pub stream: u64,
}

impl ShotHistogram {
    pub fn plus(&self, pixel: usize) -> u64 {
        self.counts[2 * pixel]
    }

    pub fn minus(&self, pixel: usize) -> u64 {
        self.counts[2 * pixel + 1]
    }

    pub fn pixels(&self) -> usize {
        self.counts.len() / 2
    }

    pub fn detected(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Multinomial draw of `shots` photons over `prob` (stream 0, one shard).
pub fn sample_shots(prob: &[f64], shots: u64, seed: u64) -> Result<ShotHistogram> {
    sample_shots_stream(prob, shots, seed, 0, 1)
}

/// Multinomial draw split over `shards` independent RNG streams and merged by
/// summation. The result depends only on `(seed, stream, shards)`, not on thread
/// scheduling.
pub fn sample_shots_stream(
    prob: &[f64],
    shots: u64,
    seed: u64,
    stream: u64,
    shards: usize,
) -> Result<ShotHistogram> {
    let total = validate(prob)?;
    if shards == 0 || shards > MAX_SHARDS {
        return Err(Error::InvalidArgument(format!("shard count {shards} outside 1..={MAX_SHARDS}")));
    }
    let per = shots / shards as u64;
    let extra = shots % shards as u64;
    let parts: Vec<(Vec<u64>, u64)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = per + u64::from((s as u64) < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((stream << 8) | s as u64);
            multinomial(prob, total, n, &mut rng)
        })
        .collect();
    let mut counts = vec![0u64; prob.len()];
    let mut undetected = 0;
    for (c, u) in parts {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        undetected += u;
    }
    Ok(ShotHistogram { counts, undetected, shots, seed, stream })
}

fn validate(prob: &[f64]) -> Result<f64> {
    if prob.is_empty() {
        return Err(Error::InvalidProbability { reason: "empty probability vector".into() });
    }
    if let Some(i) = prob.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidProbability { reason: format!("entry {i} is {}", prob[i]) });
    }
    let total: f64 = prob.iter().sum();
    if total > 1.0 + 1e-9 {
        return Err(Error::InvalidProbability { reason: format!("probabilities sum to {total}") });
    }
    Ok(total)
}

// Sequential conditional binomials; whatever is left after the last cell goes undetected.
fn multinomial(prob: &[f64], total: f64, shots: u64, rng: &mut ChaCha8Rng) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; prob.len()];
    let mut remaining = shots;
    let mut mass = total.max(1.0);
    for (c, &p) in counts.iter_mut().zip(prob) {
        if remaining == 0 {
            break;
        }
        if p > 0.0 {
            let q = if mass > 0.0 { (p / mass).min(1.0) } else { 1.0 };
            // q is in [0, 1] by construction, so construction cannot fail
            *c = Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0);
            remaining -= *c;
        }
        mass -= p;
    }
    (counts, remaining)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_distribution() {
        let h = sample_shots(&[0.0, 1.0, 0.0, 0.0], 12345, 7).unwrap();
        assert_eq!(h.counts, vec![0, 12345, 0, 0]);
        assert_eq!(h.undetected, 0);
    }

    #[test]
    fn uniform_counts_within_five_sigma() {
        let n = 1_000_000u64;
        let h = sample_shots(&[0.25; 4], n, 99).unwrap();
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for &c in &h.counts {
            assert!((c as f64 - 250_000.0).abs() < 5.0 * sigma);
        }
        assert_eq!(h.detected() + h.undetected, n);
    }

    #[test]
    fn deterministic_and_shard_reproducible() {
        let p = [0.1, 0.2, 0.3, 0.15, 0.2];
        let a = sample_shots_stream(&p, 100_000, 5, 3, 8).unwrap();
        let b = sample_shots_stream(&p, 100_000, 5, 3, 8).unwrap();
        assert_eq!(a, b);
        let c = sample_shots_stream(&p, 100_000, 5, 4, 8).unwrap();
        assert_ne!(a.counts, c.counts);
        assert_eq!(a.detected() + a.undetected, 100_000);
        // deficit of 0.05 lands in the undetected bin
        let frac = a.undetected as f64 / 1e5;
        assert!((frac - 0.05).abs() < 5.0 * (0.05 * 0.95 / 1e5f64).sqrt());
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(sample_shots(&[0.7, 0.6], 10, 1), Err(Error::InvalidProbability { .. })));
        assert!(matches!(sample_shots(&[-0.1, 0.6], 10, 1), Err(Error::InvalidProbability { .. })));
        assert!(matches!(sample_shots(&[f64::NAN], 10, 1), Err(Error::InvalidProbability { .. })));
        assert!(sample_shots_stream(&[1.0], 10, 1, 0, 0).is_err());
    }
}
