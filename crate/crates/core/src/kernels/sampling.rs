//! Seeded inversion sampling.
//!
//! All randomness in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! `seed_from_u64`. Independent streams for the same seed are taken with `set_stream`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pmf::TruncatedPmf;

pub type SimRng = ChaCha8Rng;

pub const MAX_SAMPLING_TAIL: f64 = 1e-9;

pub fn rng_for(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator seeded with `seed`.
pub fn split_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cumulative table for repeated inversion.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    start: u64,
    cdf: Vec<f64>,
}

impl InverseCdf {
    pub fn new(pmf: &TruncatedPmf) -> Result<Self> {
        if pmf.tail_bound() >= MAX_SAMPLING_TAIL {
            return Err(Error::TailTooHeavy(pmf.tail_bound()));
        }
        let mut acc = 0.0;
        let cdf = pmf
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            start: pmf.support_start(),
            cdf,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        self.start + idx as u64
    }
}

/// `n` draws by CDF inversion over the stored window.
pub fn sample(pmf: &TruncatedPmf, n: usize, seed: u64) -> Result<Vec<u64>> {
    let inv = InverseCdf::new(pmf)?;
    let mut rng = rng_for(seed);
    Ok((0..n).map(|_| inv.draw(&mut rng)).collect())
}

/// Empirical pmf of a sample, on `0..=max`.
pub fn empirical_pmf(draws: &[u64]) -> Vec<f64> {
    let max = draws.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &d in draws {
        counts[d as usize] += 1;
    }
    let n = draws.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}
