//! Deterministic pseudo-random number generation.
//!
//! The toolkit's reproducibility contract is "same seed, same bytes", which
//! rules out generators whose streams may change between library versions.
//! The generator here is SplitMix64 (Steele, Lea & Flood's `splitmix64`
//! finalizer over a Weyl sequence): 64-bit state, fixed increment, three
//! xor-shift-multiply rounds. It is fully specified by the constants below
//! and produces identical streams on every platform and every run.

use std::f64::consts::TAU;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform angle in `[0, 2π)`.
    pub fn next_angle(&mut self) -> f64 {
        TAU * self.next_f64()
    }

    /// Uniform in `[-amplitude, amplitude)`.
    pub fn next_symmetric(&mut self, amplitude: f64) -> f64 {
        amplitude * (2.0 * self.next_f64() - 1.0)
    }
}

/// Derives the seed for an independent sub-stream (realization index,
/// surrogate index, ...) from a root seed.
///
/// The value equals the `index + 1`-th output of `SplitMix64::new(seed)`,
/// computed statelessly, so sub-streams built in parallel and in series
/// agree bit for bit.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))))
}
