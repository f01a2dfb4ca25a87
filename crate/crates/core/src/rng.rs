//! Counter-based random streams.
//!
//! Every random quantity in the crate is addressed by `(seed, stream, draw index)`.
//! A ChaCha generator is positioned directly at the requested draw, so a work
//! item can regenerate its randomness without knowing how the surrounding work
//! was partitioned across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Stream identifiers. Distinct consumers never share a stream.
pub(crate) mod streams {
    pub const PARAMETER_SPACE: u64 = 1;
    pub const IFS_DIGITS: u64 = 2;
    pub const LATTICE: u64 = 3;
    pub const UNIFORM: u64 = 4;
    pub const PRODUCT: u64 = 5;
    pub const PAIRS: u64 = 6;
    pub const CENTERS: u64 = 7;
    pub const ENERGY_PAIRS: u64 = 8;
    pub const DIRECTIONS: u64 = 9;
    pub const ENSEMBLE: u64 = 10;
    pub const SPHERE: u64 = 11;
}

/// Generator positioned at the `draw`-th 64-bit output of `(seed, stream)`.
pub(crate) fn counter_rng(seed: u64, stream: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // one u64 consumes two 32-bit words
    rng.set_word_pos(u128::from(draw) * 2);
    rng
}

/// Mixes a parent seed with a tag into an independent child seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` from exactly one draw (multiply-shift, bias below 2^-32 for n < 2^32).
#[inline]
pub(crate) fn index_below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// Standard normal pair by Box-Muller; consumes exactly two draws.
#[inline]
pub(crate) fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = 1.0 - unit(rng);
    let u2 = unit(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Uniform point on the unit sphere in `R^d`; consumes `2 * ceil(d / 2)` draws.
pub(crate) fn unit_sphere<T: Real>(rng: &mut ChaCha8Rng, d: usize) -> Vec<T> {
    loop {
        let mut g = Vec::with_capacity(d + 1);
        while g.len() < d {
            let (a, b) = normal_pair(rng);
            g.push(a);
            g.push(b);
        }
        g.truncate(d);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|x| T::lit(x / norm)).collect();
        }
    }
}
