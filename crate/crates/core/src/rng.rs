//! Seeded random numbers shared by excitation generation, weight
//! initialisation and the randomized tests. Thin wrapper over ChaCha8 so
//! sequences are reproducible across platforms and crate versions.

use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn seed(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)` with 53 random mantissa bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `[0, n)`; `n` must be nonzero.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        // Rejection-free modulo bias is negligible for the small n used here,
        // but stay exact anyway.
        let zone = u64::MAX - (u64::MAX % n as u64);
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return (x % n as u64) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }

    /// Standard normal via Box-Muller (used only in tests and probes).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        crate::fmath::sqrt(-2.0 * crate::fmath::ln(u1))
            * crate::fmath::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}
