//! Seeded random source with counter-based stream derivation.
//!
//! The generator is a splitmix64 counter: the state advances by a fixed odd
//! increment and each output is a finalizer hash of the state, so a stream is
//! fully determined by its 64-bit seed. `derive` hashes (seed, index) into a
//! fresh seed, which is how datasets get one independent stream per sample
//! index regardless of generation order or parallelism.

use crate::fmath;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream. Single-owner by design: spawn independent
/// streams with [`Rng::derive`] instead of sharing one across tasks.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    state: u64,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            state: mix64(seed ^ GOLDEN_GAMMA),
            spare_normal: None,
        }
    }

    /// Seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for a sub-task, keyed by `index`. Identical
    /// (seed, index) pairs always produce identical streams.
    pub fn derive(&self, index: u64) -> Rng {
        Rng::new(mix64(self.seed ^ mix64(index.wrapping_add(GOLDEN_GAMMA))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). `n` must be nonzero; modulo bias is
    /// negligible for the constellation/index sizes used here.
    pub fn next_index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller; pairs are generated together and the
    /// second value cached, so draws stay aligned with the underlying stream.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        // 1 - u1 is in (0, 1], keeping the log argument positive.
        let radius = fmath::sqrt(-2.0 * fmath::ln(1.0 - u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(radius * fmath::sin(angle));
        radius * fmath::cos(angle)
    }

    /// Circularly-symmetric complex Gaussian with per-complex-entry variance
    /// `var`: real and imaginary parts are each N(0, var/2).
    pub fn next_complex_normal(&mut self, var: f64) -> (f64, f64) {
        let scale = fmath::sqrt(var * 0.5);
        (scale * self.next_normal(), scale * self.next_normal())
    }

    /// Deterministic Fisher-Yates permutation of 0..n.
    pub fn shuffled_indices(&mut self, n: usize) -> alloc::vec::Vec<usize> {
        let mut idx: alloc::vec::Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.next_index(i + 1);
            idx.swap(i, j);
        }
        idx
    }
}
