//! Seeded, splittable randomness.
//!
//! Every stream is a ChaCha20 keystream: the key is derived from the 64-bit
//! seed and the 64-bit ChaCha stream id selects an independent keystream for
//! the same key. Sub-streams are addressed by hashing a parent stream id with a
//! child index through SplitMix64, so `(seed, experiment, sample)` always names
//! the same draws no matter in which order jobs are run.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator for child `index` of this stream. Does not advance `self`.
    pub fn split(&self, index: u64) -> Self {
        let child = splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self::new(self.seed, child)
    }

    /// Shorthand for `split(a).split(b)`.
    pub fn split2(&self, a: u64, b: u64) -> Self {
        self.split(a).split(b)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in the inclusive range.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn bit(&mut self) -> u8 {
        (self.inner.next_u32() & 1) as u8
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Circular-symmetric complex Gaussian with total power `variance`.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        let re = self.normal();
        let im = self.normal();
        Complex64::new(s * re, s * im)
    }
}

/// Draws one sample of CN(0, variance).
pub fn sample_complex_normal(rng: &mut SeededRng, variance: f64) -> Result<Complex64> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("complex normal variance {variance} must be finite and >= 0")));
    }
    if variance == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(rng.complex_normal(variance))
}
