//! Seeded random streams.
//!
//! Every module draws from ChaCha8 seeded by the run seed, on its own stream
//! number, so one module's draws never shift another's sequence.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Stream used by [`crate::positives`].
pub const STREAM_POSITIVES: u64 = 1;
/// Stream used by random grouping in [`crate::selection`].
pub const STREAM_GROUPING: u64 = 2;
/// Stream used by [`crate::synthetic`].
pub const STREAM_SYNTHETIC: u64 = 3;
/// Stream used by [`crate::verify`] trials.
pub const STREAM_VERIFY: u64 = 4;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic sub-seed for an indexed task (splitmix64 finalizer).
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}
