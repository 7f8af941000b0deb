//! Seeded randomness shared by the corpus split, epoch shuffles and weight init.
//!
//! Generator: xoshiro256** whose 256-bit state is four consecutive SplitMix64
//! outputs starting from the 64-bit seed. Every derived draw is defined here so
//! another implementation can reproduce partitions and initial weights exactly:
//!
//! - `below(n)`: `(next_u64() as u128 * n as u128) >> 64` (multiply-shift, no rejection)
//! - `unit_f64()`: `(next_u64() >> 11) * 2^-53`, in `[0, 1)`
//! - `shuffle`: Fisher–Yates from the last index down, `j = below(i + 1)`

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

/// Offset mixed into per-epoch shuffle seeds (the 64-bit golden ratio).
const EPOCH_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Stream used to shuffle the training set in `epoch` (1-based).
    pub fn for_epoch(seed: u64, epoch: usize) -> Self {
        Self::new(seed ^ EPOCH_STREAM.wrapping_mul(epoch as u64))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-bound, bound)`.
    pub fn symmetric(&mut self, bound: f64) -> f64 {
        -bound + 2.0 * bound * self.unit_f64()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
