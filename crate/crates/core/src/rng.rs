//! Seed derivation. Every random draw in the crate flows from an explicit
//! 64-bit seed; sub-streams are derived by hashing the seed together with
//! the inputs that identify the draw.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Accumulates words into a derived seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedMixer(u64);

impl SeedMixer {
    pub fn new(seed: u64) -> Self {
        Self(splitmix64(seed))
    }

    pub fn word(self, w: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(w)))
    }

    /// Mixes the bit pattern of `x` (with -0.0 folded onto 0.0).
    pub fn float(self, x: f64) -> Self {
        let x = if x == 0.0 { 0.0 } else { x };
        self.word(x.to_bits())
    }

    pub fn finish(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    SeedMixer::new(seed).word(tag).finish()
}

/// Circularly-symmetric complex Gaussian sample with `E|z|² = power`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}
