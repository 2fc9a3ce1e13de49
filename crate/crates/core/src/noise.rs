//! Seedable noise source and inverse-CDF Laplace sampling.
//!
//! The generator is xoshiro256++ seeded from a 64-bit seed through
//! SplitMix64 (the reference seeding procedure of the xoshiro family).
//! A uniform `u ∈ (-1/2, 1/2)` is built from the top 53 bits of one 64-bit
//! output as `(k + 1/2)·2⁻⁵³ − 1/2`, which never hits `0` or `±1/2`, and
//! the Laplace draw is `b·sign(u)·ln(1 − 2|u|)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseRng {
    inner: Xoshiro256PlusPlus,
}

impl NoiseRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval `(-1/2, 1/2)`.
    pub fn centered_uniform(&mut self) -> f64 {
        let k = (self.next_u64() >> 11) as f64;
        (k + 0.5) * (1.0 / (1u64 << 53) as f64) - 0.5
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (self.centered_uniform() + 0.5) * (hi - lo)
    }
}

/// Laplace value for a given centered uniform. Scale 0 yields 0.
#[inline]
pub(crate) fn laplace_from_uniform(scale: f64, u: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Zero-mean Laplace draw with the given scale.
pub fn laplace_sample(scale: f64, rng: &mut NoiseRng) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::NonPositiveScale(scale));
    }
    Ok(laplace_from_uniform(scale, rng.centered_uniform()))
}

/// SplitMix64 finalizer, used to derive independent substream seeds.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
