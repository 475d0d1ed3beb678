//! Deterministic helpers shared by unit tests across modules.

use crate::tensor::Mat3;

/// SplitMix64 generator; frozen algorithm so seeded sweeps never drift.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [-1, 1).
    pub fn next_sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

pub fn random_mat(rng: &mut SplitMix64, amp: f64) -> Mat3 {
    Mat3::from_fn(|_, _| amp * rng.next_sym())
}
