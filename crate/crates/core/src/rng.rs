//! Seeded random streams.
//!
//! Every random quantity in the toolkit comes from a SplitMix64 stream
//! (Steele, Lea & Flood 2014; state += 0x9E3779B97F4A7C15, then the
//! standard xor-shift/multiply finalizer) seeded directly with the user's
//! 64-bit seed. Derived draws are:
//!
//! * uniform in `[0, 1)`: `(next_u64() >> 11) as f64 * 2^-53`
//! * Bernoulli(p): `uniform() < p`
//! * standard normal: Box-Muller on two consecutive uniforms `u1, u2`,
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` followed by the matching `sin`
//!   branch on the next call.
//!
//! Porting these four lines to another language reproduces masks bit for
//! bit; Gaussian draws agree to the accuracy of the host `ln`/`cos`/`sin`.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

pub struct SeededStream {
    inner: SplitMix64,
    spare_normal: Option<f64>,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Uniform integer in `0..bound` by rejection, without modulo bias.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0.
        let mut s = SeededStream::new(0);
        assert_eq!(s.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(s.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = SeededStream::new(11);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments() {
        let mut s = SeededStream::new(5);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn below_is_in_range() {
        let mut s = SeededStream::new(3);
        for bound in [1u64, 2, 7, 1000] {
            for _ in 0..1000 {
                assert!(s.below(bound) < bound);
            }
        }
    }
}
