//! Streaming mean/variance with an associative merge, and a deterministic
//! chunked driver for parallel Monte-Carlo loops.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::haar::RandomSource;

/// Samples per independent sub-stream in [`chunked_stats`].
pub const CHUNK_SIZE: usize = 8192;

/// Welford accumulator. `merge` follows the pairwise update of Chan et al.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean; zero with fewer than two samples.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `sample` `n` times and accumulates `K` statistics per draw.
///
/// Draws are split into chunks of [`CHUNK_SIZE`]; chunk `i` uses the
/// sub-stream `(seed, i)` where `seed` is taken from `rng`. Chunks are merged
/// in index order, so the result does not depend on the rayon pool size.
pub fn chunked_stats<const K: usize, F>(
    rng: &mut RandomSource,
    n: usize,
    sample: F,
) -> [RunningStats; K]
where
    F: Fn(&mut RandomSource) -> [f64; K] + Sync,
{
    let seed = rng.next_seed();
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    let partials: Vec<[RunningStats; K]> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut src = RandomSource::new(seed, chunk as u64);
            let len = CHUNK_SIZE.min(n - chunk * CHUNK_SIZE);
            let mut acc = [RunningStats::new(); K];
            for _ in 0..len {
                for (a, x) in acc.iter_mut().zip(sample(&mut src)) {
                    a.push(x);
                }
            }
            acc
        })
        .collect();
    partials.iter().fold([RunningStats::new(); K], |acc, part| {
        std::array::from_fn(|k| acc[k].merge(&part[k]))
    })
}
