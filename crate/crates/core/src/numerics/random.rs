//! Seeded random generation.
//!
//! Every sampler takes a [`GfiRng`] by mutable reference. Parallel chains and
//! simulation replicates get their own generator, seeded `base + k`, so runs
//! are reproducible regardless of how work is scheduled.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Gamma, StandardNormal};

use crate::error::{domain, Result};

/// The generator used throughout the crate (ChaCha with 8 rounds).
pub type GfiRng = ChaCha8Rng;

/// Generator seeded from a 64-bit seed.
pub fn seeded(seed: u64) -> GfiRng {
    GfiRng::seed_from_u64(seed)
}

/// Generator for chain or replicate `k` of a run with base seed `base`.
pub fn stream(base: u64, k: u64) -> GfiRng {
    seeded(base.wrapping_add(k))
}

/// Mixes a seed with a tag (splitmix64 finalizer).
///
/// Replicate `r` of a study uses seed `base + r`; the data simulation and the
/// sampler inside that replicate then use `derive(base + r, tag)` so that the
/// streams of neighbouring replicates never coincide.
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gamma(shape, rate) draw.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return domain(format!(
            "gamma parameters must be positive, got ({shape}, {rate})"
        ));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| crate::GfiError::Domain(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Normal(mean, sd) draw.
pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> Result<f64> {
    if !(sd >= 0.0 && sd.is_finite() && mean.is_finite()) {
        return domain(format!("normal parameters invalid: mean {mean}, sd {sd}"));
    }
    Ok(mean + sd * standard_normal(rng))
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform draw on the half-open interval `(lo, hi]`.
pub fn sample_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return domain(format!(
            "uniform bounds must satisfy lo < hi, got ({lo}, {hi})"
        ));
    }
    let u: f64 = rng.random();
    Ok(hi - (hi - lo) * u)
}

/// `m` independent Bin(n, p) counts.
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, m: usize, rng: &mut R) -> Result<Vec<u64>> {
    let b = Binomial::new(n, p).map_err(|e| crate::GfiError::Domain(e.to_string()))?;
    Ok((0..m).map(|_| b.sample(rng)).collect())
}

/// Uniform draw strictly inside `(0, 1)`.
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// Beta(a, b) draw with the point-mass conventions for a zero parameter.
pub(crate) fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if b <= 0.0 {
        return 1.0;
    }
    Beta::new(a, b)
        .expect("positive beta parameters")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean() {
        let mut rng = seeded(1);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_uniform(0.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005);
    }

    #[test]
    fn uniform_is_half_open_on_the_left() {
        let mut rng = seeded(2);
        for _ in 0..10_000 {
            let x = sample_uniform(2.0, 3.0, &mut rng).unwrap();
            assert!(x > 2.0 && x <= 3.0);
        }
    }

    #[test]
    fn gamma_mean() {
        let mut rng = seeded(3);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_gamma(2.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let se = 2.0_f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se);
        let mean_r: f64 = (0..n)
            .map(|_| sample_gamma(3.0, 4.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean_r - 0.75).abs() < 3.0 * (3.0_f64).sqrt() / 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn normal_moments() {
        let mut rng = seeded(4);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_normal(1.5, 2.0, &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.5).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        // sd of the sample variance is about σ²√(2/n)
        assert!((var - 4.0).abs() < 3.0 * 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn fixed_seed_repeats() {
        let a: Vec<f64> = {
            let mut rng = seeded(99);
            (0..10)
                .map(|_| sample_gamma(1.3, 0.7, &mut rng).unwrap())
                .collect()
        };
        let b: Vec<f64> = {
            let mut rng = seeded(99);
            (0..10)
                .map(|_| sample_gamma(1.3, 0.7, &mut rng).unwrap())
                .collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut rng = seeded(0);
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(sample_normal(0.0, -1.0, &mut rng).is_err());
        assert!(sample_uniform(1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive(5, 0), derive(5, 1));
        assert_ne!(derive(5, 0), derive(6, 0));
        assert_eq!(derive(5, 3), derive(5, 3));
    }
}
