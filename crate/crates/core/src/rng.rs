//! Seeded generators and worker sharding.
//!
//! All randomness in the crate flows through ChaCha12 seeded from an explicit
//! `u64`; workers get independent streams of the same seed, so any result is a
//! pure function of `(seed, workers)`.

use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};

pub type DefaultRng = rand_chacha::ChaCha12Rng;

/// Generator for worker `stream` of the given seed.
pub fn seeded(seed: u64, stream: u64) -> DefaultRng {
    let mut rng = DefaultRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in [0, 1) with 53 random bits.
#[inline(always)]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Split `total` work items across `workers` (first shards get the remainder).
pub fn shard_counts(total: u64, workers: u32) -> Vec<u64> {
    let workers = workers.max(1) as u64;
    let base = total / workers;
    let extra = total % workers;
    (0..workers).map(|w| base + u64::from(w < extra)).collect()
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
    pub count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * crate::math::exp(self.max - x) + 1.0;
            self.max = x;
        } else {
            self.sum += crate::math::exp(x - self.max);
        }
    }

    /// ln Σ e^{x_i}; NEG_INFINITY when nothing was pushed.
    pub fn ln_sum(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + crate::math::ln(self.sum)
        }
    }

    /// Merge two accumulators (associative up to rounding).
    pub fn merge(self, other: LogSumExp) -> LogSumExp {
        let (hi, lo) = if self.max >= other.max {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = hi;
        out.count = self.count + other.count;
        if lo.sum != 0.0 {
            out.sum += lo.sum * crate::math::exp(lo.max - hi.max);
        }
        out
    }
}

/// Reduce per-worker accumulators with a fixed balanced-tree shape so the
/// result does not depend on traversal order.
pub fn tree_merge<T: Copy, F: Fn(T, T) -> T + Copy>(items: &[T], merge: F) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0]),
        n => {
            let mid = n / 2;
            let left = tree_merge(&items[..mid], merge)?;
            let right = tree_merge(&items[mid..], merge)?;
            Some(merge(left, right))
        }
    }
}
