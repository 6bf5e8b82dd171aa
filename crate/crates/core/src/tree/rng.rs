//! Seeded, portable randomness for splits, bootstraps and feature sampling.
//!
//! The generator is ChaCha with 8 rounds, keyed by expanding a `u64` seed with
//! PCG32 (`rand_core::SeedableRng::seed_from_u64`). Independent sub-streams
//! come from ChaCha's 64-bit stream id, so tree `i` of a forest draws from
//! stream `i` regardless of how many numbers earlier trees consumed. Integer
//! ranges use rejection sampling on whole `u64` words, so the sequence can be
//! reproduced from the algorithm description alone.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream reserved for the train/test shuffle.
pub const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Generator for `seed` positioned at the start of sub-stream `stream`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Self::new(seed);
        rng.inner.set_stream(stream);
        rng.inner.set_word_pos(0);
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Words at or above the largest multiple of
    /// `n` are discarded to avoid modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates, walking from the last slot down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct items drawn by a partial forward Fisher–Yates pass,
    /// returned in ascending order. With `k >= items.len()` every item is kept.
    pub fn choose_sorted<T: Copy + Ord>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut pool = items.to_vec();
        let k = k.min(pool.len());
        for i in 0..k {
            let j = i + self.below(pool.len() - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
