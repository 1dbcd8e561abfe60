//! Seeded Monte Carlo estimation of region volumes.
//!
//! Sampling is chunked and each chunk draws from its own ChaCha stream, so the
//! estimate is reproducible for a fixed seed regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::quad::BoxDomain;
use crate::parallel;

const CHUNK: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    /// One standard error of the estimate.
    pub std_err: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Unbiased estimate of the volume of `{x ∈ window : indicator(x)}`.
pub fn mc_region_measure<F>(
    indicator: F,
    window: &BoxDomain,
    samples: u64,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if samples == 0 {
        return Err(Error::domain("mc_region_measure requires samples ≥ 1"));
    }
    let vol = window.volume();
    if vol <= 0.0 {
        return Err(Error::domain("zero-volume window"));
    }
    let dim = window.dim();
    let chunks = samples.div_ceil(CHUNK);

    let counts = parallel::map_indexed(chunks as usize, |c| {
        let c = c as u64;
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(samples);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let mut point = vec![0.0f64; dim];
        let mut hits = 0u64;
        for _ in lo..hi {
            for (d, p) in point.iter_mut().enumerate() {
                *p = rng.gen_range(window.lo[d]..window.hi[d]);
            }
            if indicator(&point) {
                hits += 1;
            }
        }
        hits
    });
    let hits: u64 = counts.into_iter().sum();

    let p = hits as f64 / samples as f64;
    let var = (p * (1.0 - p) / samples as f64).max(0.0);
    Ok(McEstimate {
        value: vol * p,
        std_err: vol * var.sqrt(),
        hits,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disk_area_within_three_sigma() {
        let window = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let est = mc_region_measure(
            |x| x[0] * x[0] + x[1] * x[1] <= 1.0,
            &window,
            1_000_000,
            42,
        )
        .unwrap();
        assert!((est.value - std::f64::consts::PI).abs() < 3.0 * est.std_err);
    }

    #[test]
    fn empty_region_is_exactly_zero() {
        let window = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let est = mc_region_measure(|_| false, &window, 10_000, 7).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn half_space_slice_halves_the_ball() {
        let window = BoxDomain::new(vec![-1.5, -1.5], vec![1.5, 1.5]).unwrap();
        let full = mc_region_measure(
            |x| x[0] * x[0] + x[1] * x[1] <= 1.0,
            &window,
            400_000,
            3,
        )
        .unwrap();
        let half = mc_region_measure(
            |x| x[0] * x[0] + x[1] * x[1] <= 1.0 && x[0] >= 0.0,
            &window,
            400_000,
            3,
        )
        .unwrap();
        let sigma = (full.std_err.powi(2) + 4.0 * half.std_err.powi(2)).sqrt();
        assert!((full.value - 2.0 * half.value).abs() < 3.0 * sigma);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let window = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let a = mc_region_measure(|x| x[0] + x[1] <= 1.0, &window, 300_000, 11).unwrap();
        let b = mc_region_measure(|x| x[0] + x[1] <= 1.0, &window, 300_000, 11).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.hits, b.hits);
    }
}
