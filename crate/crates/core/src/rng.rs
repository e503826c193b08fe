//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from a ChaCha8 stream derived from a
//! 64-bit seed plus a stream tag, so independent components never share state
//! and results do not depend on call order elsewhere in the program.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;

pub type StreamRng = ChaCha8Rng;

/// Opens stream `tag` of the generator seeded with `seed`.
pub fn stream(seed: u64, tag: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// Stable 64-bit tag for a string (FNV-1a), used to derive per-language streams.
pub fn tag_of(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Uniform draw in [0, 1).
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Standard normal draw (Box-Muller, one value per call).
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    math::sqrt(-2.0 * math::log(u1)) * math::cos(math::TAU * u2)
}

/// Seeded Fisher-Yates permutation of `0..n`.
pub fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}
